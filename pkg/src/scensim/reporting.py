"""Test-suite reports: JUnit-style XML, a JSON twin, and a console table.

The XML layout follows the widely consumed junit shape so CI systems can
ingest it directly: a single testsuite whose testcases are the executed
suite entries, with one <failure> per failing criterion and an <error>
node when a run did not finish cleanly.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path

from .evaluation import criterion_label
from .runner import END_ERROR, RunResult


def _failure_message(verdict) -> str:
    c = verdict.criterion
    return (
        f"{criterion_label(c)} (observed {verdict.observed!r}, "
        f"expected {c.op} {c.value!r})"
    )


def suite_to_xml(suite_name: str, entries: list[tuple[str, RunResult]]) -> ET.ElementTree:
    total_failures = 0
    total_errors = 0
    total_time = 0.0
    cases = []
    for entry_name, result in entries:
        case = ET.Element(
            "testcase", classname=result.scenario_name, name=entry_name,
            time=f"{result.end_time:.6f}",
        )
        total_time += result.end_time
        if result.end_reason == END_ERROR:
            total_errors += 1
            err = ET.SubElement(case, "error", message=result.error or "run failed",
                                type="runtime")
            err.text = result.error or ""
        else:
            for verdict in result.verdicts:
                if verdict.passed:
                    continue
                total_failures += 1
                fail = ET.SubElement(
                    case, "failure", message=_failure_message(verdict), type="criterion"
                )
                detail = {
                    "criterion": criterion_label(verdict.criterion),
                    "observed": verdict.observed,
                    "op": verdict.criterion.op,
                    "value": verdict.criterion.value,
                }
                if verdict.error:
                    detail["error"] = verdict.error
                fail.text = json.dumps(detail, sort_keys=True)
        cases.append(case)

    suite = ET.Element(
        "testsuite",
        name=suite_name,
        tests=str(len(entries)),
        failures=str(total_failures),
        errors=str(total_errors),
        time=f"{total_time:.6f}",
    )
    suite.extend(cases)
    root = ET.Element("testsuites")
    root.append(suite)
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return tree


def write_xml_report(path, suite_name: str, entries: list[tuple[str, RunResult]]) -> None:
    tree = suite_to_xml(suite_name, entries)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tree.write(path, encoding="utf-8", xml_declaration=True)


def suite_to_json(suite_name: str, entries: list[tuple[str, RunResult]]) -> dict:
    tests = []
    for entry_name, result in entries:
        verdicts = [
            {
                "criterion": criterion_label(v.criterion),
                "observed": v.observed,
                "passed": v.passed,
                "error": v.error,
            }
            for v in result.verdicts
        ]
        tests.append(
            {
                "name": entry_name,
                "scenario": result.scenario_name,
                "end_reason": result.end_reason,
                "end_time": result.end_time,
                "passed": result.passed,
                "error": result.error,
                "metrics": result.metrics,
                "verdicts": verdicts,
            }
        )
    failures = sum(
        1 for _, r in entries for v in r.verdicts if not v.passed and r.end_reason != END_ERROR
    )
    errors = sum(1 for _, r in entries if r.end_reason == END_ERROR)
    return {
        "suite": suite_name,
        "tests": len(entries),
        "failures": failures,
        "errors": errors,
        "results": tests,
    }


def write_json_report(path, suite_name: str, entries: list[tuple[str, RunResult]]) -> None:
    doc = suite_to_json(suite_name, entries)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def summary_table(entries: list[tuple[str, RunResult]]) -> str:
    """Plain-text outcome table, one row per suite entry."""
    rows = [("entry", "scenario", "outcome", "detail")]
    for entry_name, result in entries:
        if result.end_reason == END_ERROR:
            outcome = "ERROR"
            detail = result.error or ""
        elif result.passed is False:
            outcome = "FAIL"
            failing = [criterion_label(v.criterion) for v in result.verdicts if not v.passed]
            detail = ", ".join(failing)
        else:
            outcome = "PASS"
            detail = f"{len(result.verdicts)} criteria"
        rows.append((entry_name, result.scenario_name, outcome, detail))
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = []
    for row in rows:
        lines.append(
            "  ".join(row[i].ljust(widths[i]) for i in range(3)) + "  " + row[3]
        )
    return "\n".join(lines)
