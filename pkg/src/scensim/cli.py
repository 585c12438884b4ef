"""Command-line entry point: run, campaign, test, inspect.

Exit codes: 0 success / all criteria pass, 1 at least one criterion (or
campaign run) failed, 2 configuration or validation error, 3 runtime
error.  Diagnostics go to stderr; data and summaries go to stdout.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .campaign import apply_overrides, build_run_configs, execute_campaign, parse_campaign
from .config import DEFAULT_DT, GeneralSettings, default_output_dir
from .errors import (
    ConfigError,
    ExportError,
    RecordingLoadError,
    ScenarioParseError,
    SimError,
    StorageError,
    ValidationError,
)
from .evaluation import criterion_label
from .recorder import export_csv, load_recording
from .reporting import summary_table, write_json_report, write_xml_report
from .runner import END_ERROR, run_scenario
from .scenario import parse_json_document, parse_scenario, scenario_from_dict

EXIT_OK = 0
EXIT_CRITERIA_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# Everything the framework publishes; used when --record is not given.
DEFAULT_RECORD_PATTERNS = ("/sim/*", "/sensors/*/*", "/perception/*/*", "/scenario/*")

_CONFIG_ERRORS = (
    ScenarioParseError,
    ValidationError,
    ConfigError,
    StorageError,
    RecordingLoadError,
    ExportError,
)


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _slug(name: str) -> str:
    slug = re.sub(r"[^a-z0-9_]+", "_", name.lower()).strip("_")
    return slug or "run"


def _read_file(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _print_result(result) -> None:
    print(f"scenario:    {result.scenario_name}")
    print(f"end_reason:  {result.end_reason}")
    print(f"ticks:       {result.ticks}")
    print(f"end_time:    {result.end_time:g} s")
    if result.artifact_dir:
        print(f"artifacts:   {result.artifact_dir}")
    if result.metrics:
        print("metrics:")
        for name in sorted(result.metrics):
            print(f"  {name} = {result.metrics[name]:g}")
    if result.verdicts:
        print("criteria:")
        for v in result.verdicts:
            mark = "PASS" if v.passed else "FAIL"
            c = v.criterion
            line = f"  [{mark}] {criterion_label(c)} (observed {v.observed!r})"
            if v.error:
                line += f" [{v.error}]"
            print(line)
    for note in result.run_errors:
        _err(f"warning: {note}")


def cmd_run(args) -> int:
    spec = parse_scenario(_read_file(Path(args.scenario)))
    patterns = tuple(args.record) if args.record else DEFAULT_RECORD_PATTERNS
    general = GeneralSettings(
        scenario=args.scenario,
        duration_s=args.duration,
        dt=args.dt,
        seed=args.seed,
        record_topics=patterns,
    )
    out_root = Path(args.out) if args.out else default_output_dir()
    record_dir = out_root / _slug(spec.name)
    result = run_scenario(spec, general, record_dir=record_dir, run_id=_slug(spec.name))
    if result.end_reason == END_ERROR:
        _err(f"error: run failed: {result.error}")
        return EXIT_RUNTIME
    _print_result(result)
    if result.passed is False:
        return EXIT_CRITERIA_FAILED
    return EXIT_OK


def cmd_campaign(args) -> int:
    path = Path(args.campaign)
    general, space = parse_campaign(_read_file(path), path.parent)
    configs = build_run_configs(general, space, path.parent)
    out_dir = Path(args.out) if args.out else None
    report = execute_campaign(
        general, configs, max_parallel=args.max_parallel, output_dir=out_dir
    )
    print(
        f"campaign: {report.total} runs, {report.completed} completed, "
        f"{report.failed} failed"
    )
    print(
        f"verdicts: {report.passed_verdicts} pass, {report.failed_verdicts} fail"
    )
    for run in report.runs:
        status = run["end_reason"]
        if run["passed"] is True:
            status += ", pass"
        elif run["passed"] is False:
            status += ", fail"
        print(f"  {run['run_id']}: {status}")
    if report.failed or report.failed_verdicts:
        return EXIT_CRITERIA_FAILED
    return EXIT_OK


def _load_suite(path: Path) -> tuple[str, list[dict]]:
    doc = parse_json_document(_read_file(path))
    if isinstance(doc, dict):
        name = doc.get("name", path.stem)
        raw = doc.get("tests")
    else:
        name = path.stem
        raw = doc
    if not isinstance(raw, list) or not raw:
        raise ConfigError("test suite needs a non-empty 'tests' list")
    entries = []
    for i, item in enumerate(raw):
        if isinstance(item, str):
            item = {"scenario": item}
        if not isinstance(item, dict) or "scenario" not in item:
            raise ConfigError(f"suite entry {i} must be a path or have 'scenario'")
        entries.append(item)
    return name, entries


def cmd_test(args) -> int:
    suite_path = Path(args.suite)
    suite_name, raw_entries = _load_suite(suite_path)

    # Fail fast: every scenario must parse and carry criteria before any run.
    prepared = []
    for i, entry in enumerate(raw_entries):
        scenario_path = suite_path.parent / entry["scenario"]
        doc = parse_json_document(_read_file(scenario_path))
        overrides = entry.get("overrides") or {}
        if overrides:
            doc = apply_overrides(doc, overrides, suite_path.parent)
        spec = scenario_from_dict(doc)
        if not spec.criteria:
            raise ConfigError(
                f"suite entry {i} ({entry['scenario']}): scenario has no criteria"
            )
        entry_name = entry.get("name") or Path(entry["scenario"]).stem
        prepared.append((entry_name, spec, doc, overrides))

    general = GeneralSettings(scenario=str(suite_path), dt=args.dt, seed=args.seed)
    results = []
    for entry_name, spec, doc, overrides in prepared:
        result = run_scenario(
            spec, general, scenario_doc=doc, overrides=overrides, seed=args.seed
        )
        results.append((entry_name, result))

    out_root = Path(args.out) if args.out else default_output_dir()
    report_path = Path(args.report) if args.report else out_root / "test_report.xml"
    write_xml_report(report_path, suite_name, results)
    write_json_report(report_path.with_suffix(".json"), suite_name, results)
    print(summary_table(results))
    _err(f"report: {report_path}")

    if any(r.end_reason == END_ERROR for _, r in results):
        return EXIT_RUNTIME
    if any(r.passed is False for _, r in results):
        return EXIT_CRITERIA_FAILED
    return EXIT_OK


def cmd_inspect(args) -> int:
    recording = load_recording(args.run_dir)
    m = recording.manifest
    print(f"run_id:       {m.run_id}")
    print(f"scenario:     {m.scenario_name}")
    print(f"end_reason:   {m.end_reason}")
    print(f"seed:         {m.seed}")
    print(f"dt:           {m.dt:g}")
    print(f"created:      {m.created}")
    print(f"config_hash:  {m.config_hash}")
    print(f"corrupt:      {m.corrupt}")
    print("topics:")
    for info in m.topics:
        print(f"  {info.topic}  kind={info.payload_kind}  messages={info.message_count}")
    if args.export_csv:
        out = export_csv(recording, args.export_csv)
        print(f"exported: {out}")
    if args.plot:
        from . import plots

        for fig in plots.render_run_figures(recording, recording.root / "export"):
            print(f"figure: {fig}")
    if m.corrupt:
        _err("error: recording is marked corrupt (message counts do not match)")
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scensim",
        description="Deterministic scenario-based 2D traffic simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single scenario")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--dt", type=float, default=DEFAULT_DT, help="tick length in seconds")
    p_run.add_argument("--seed", type=int, default=0, help="world RNG seed")
    p_run.add_argument(
        "--record", action="append", metavar="PATTERN",
        help="topic pattern to record (repeatable; default: all framework topics)",
    )
    p_run.add_argument("--out", help="output directory (default: $CARLOS_LITE_OUT or ./out)")
    p_run.add_argument(
        "--duration", type=float, metavar="S", help="override the scenario timeout"
    )
    p_run.set_defaults(func=cmd_run)

    p_camp = sub.add_parser("campaign", help="execute a permutation campaign")
    p_camp.add_argument("campaign", help="campaign JSON file")
    p_camp.add_argument("--max-parallel", type=int, help="worker pool size override")
    p_camp.add_argument("--out", help="output directory override")
    p_camp.set_defaults(func=cmd_campaign)

    p_test = sub.add_parser("test", help="run a pass/fail scenario suite")
    p_test.add_argument("suite", help="suite JSON file")
    p_test.add_argument("--report", help="XML report path (JSON twin written alongside)")
    p_test.add_argument("--dt", type=float, default=DEFAULT_DT)
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--out", help="output directory for the default report path")
    p_test.set_defaults(func=cmd_test)

    p_ins = sub.add_parser("inspect", help="summarize a recorded run directory")
    p_ins.add_argument("run_dir", help="run directory containing manifest.json")
    p_ins.add_argument("--export-csv", metavar="TOPIC", help="export one topic to CSV")
    p_ins.add_argument("--plot", action="store_true", help="render figures into export/")
    p_ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        _err(f"error: {exc}")
        return EXIT_CONFIG
    except SimError as exc:
        _err(f"error: {exc}")
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - defensive
        _err(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
