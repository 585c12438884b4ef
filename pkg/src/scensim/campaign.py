"""Campaign orchestration: parameter-space expansion into run permutations
and their execution with a bounded worker pool.

A campaign document has two parts: general settings shared by every run and
a parameter space mapping override paths to value lists.  The Cartesian
product of the value lists defines the runs; dimensions are ordered
lexicographically by path and the rightmost dimension varies fastest.
"""

from __future__ import annotations

import copy
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .bus import validate_pattern
from .config import GeneralSettings, KNOWN_SERVICES, default_output_dir
from .errors import ConfigError, StorageError, TopicError, ValidationError
from .runner import END_ERROR, RunResult, run_scenario
from .scenario import ScenarioSpec, parse_json_document, scenario_from_dict

SCENARIO_FILE_KEY = "scenario_file"

_GENERAL_KEYS = {
    "scenario", "duration_s", "dt", "seed", "record_topics",
    "output_dir", "max_parallel", "services",
}

_ENTITY_FIELDS = {
    "path", "station", "speed", "target_speed",
    "max_accel", "max_decel", "length", "width",
}
_SENSOR_FIELDS = {"kind", "mount_entity", "range", "fov", "topic", "beam_count", "noise_stddev"}


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved permutation: effective document, spec, id, seed."""

    run_id: str
    seed: int
    overrides: dict
    doc: dict
    spec: ScenarioSpec


@dataclass
class CampaignReport:
    total: int
    completed: int
    failed: int
    passed_verdicts: int
    failed_verdicts: int
    wall_time_s: float
    runs: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "completed": self.completed,
            "failed": self.failed,
            "verdicts": {"pass": self.passed_verdicts, "fail": self.failed_verdicts},
            "wall_time_s": self.wall_time_s,
            "runs": self.runs,
        }


def _value_kind(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    raise ConfigError(f"unsupported parameter value {v!r}")


def parse_campaign(text: str, base_dir=".") -> tuple[GeneralSettings, dict]:
    """Parse a campaign document and validate it against the base scenario.

    Returns the general settings and the parameter space.  Every override
    path is checked against the base document (all of them, when
    ``scenario_file`` is itself a dimension) before any run starts.
    """
    doc = parse_json_document(text)
    if not isinstance(doc, dict):
        raise ConfigError("campaign document must be an object")
    for key in doc:
        if key not in ("general", "parameter_space"):
            raise ConfigError(f"unknown campaign key {key!r}")
    raw_general = doc.get("general")
    if not isinstance(raw_general, dict):
        raise ConfigError("missing 'general' section")
    for key in raw_general:
        if key not in _GENERAL_KEYS:
            raise ConfigError(f"unknown general setting {key!r}")
    if "scenario" not in raw_general:
        raise ConfigError("missing general.scenario")

    general = GeneralSettings(
        scenario=raw_general["scenario"],
        duration_s=raw_general.get("duration_s"),
        dt=raw_general.get("dt", GeneralSettings.dt),
        seed=raw_general.get("seed", 0),
        record_topics=tuple(raw_general.get("record_topics", ())),
        output_dir=raw_general.get("output_dir"),
        max_parallel=raw_general.get("max_parallel", 1),
        services=tuple(raw_general.get("services", ())),
    )
    _validate_general(general)

    space = doc.get("parameter_space", {})
    if not isinstance(space, dict):
        raise ConfigError("parameter_space must be an object")
    for path, values in space.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"parameter {path!r} needs a non-empty value list")
        kinds = {_value_kind(v) for v in values}
        if len(kinds) > 1:
            raise ConfigError(f"parameter {path!r} mixes value kinds {sorted(kinds)}")

    base_dir = Path(base_dir)
    base_docs = _base_documents(general, space, base_dir)
    for path in space:
        if path == SCENARIO_FILE_KEY:
            continue
        for base in base_docs:
            _resolve_override_path(base, path)
    return general, space


def _validate_general(general: GeneralSettings) -> None:
    if not isinstance(general.scenario, str) or not general.scenario:
        raise ConfigError("general.scenario must be a non-empty path")
    if general.dt <= 0:
        raise ConfigError("general.dt must be > 0")
    if general.duration_s is not None and general.duration_s <= 0:
        raise ConfigError("general.duration_s must be > 0")
    if not isinstance(general.seed, int) or isinstance(general.seed, bool):
        raise ConfigError("general.seed must be an integer")
    if not isinstance(general.max_parallel, int) or general.max_parallel < 1:
        raise ConfigError("general.max_parallel must be >= 1")
    for pattern in general.record_topics:
        try:
            validate_pattern(pattern)
        except TopicError as exc:
            raise ConfigError(str(exc)) from exc
    for service in general.services:
        if service not in KNOWN_SERVICES:
            raise ConfigError(
                f"unknown service {service!r}; known: {', '.join(KNOWN_SERVICES)}"
            )


def _load_scenario_doc(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    doc = parse_json_document(text)
    scenario_from_dict(doc)  # validate eagerly; errors abort the campaign
    return doc


def _base_documents(general: GeneralSettings, space: dict, base_dir: Path) -> list[dict]:
    if SCENARIO_FILE_KEY in space:
        files = space[SCENARIO_FILE_KEY]
        if any(not isinstance(v, str) for v in files):
            raise ConfigError(f"{SCENARIO_FILE_KEY} values must be paths")
        return [_load_scenario_doc(base_dir / f) for f in files]
    return [_load_scenario_doc(base_dir / general.scenario)]


def _resolve_override_path(doc: dict, path: str):
    """Return (container, key) for an override path, or raise ConfigError."""
    parts = path.split(".")
    if parts[0] == "entities" and len(parts) == 3:
        _, entity_id, fld = parts
        if fld not in _ENTITY_FIELDS:
            raise ConfigError(f"cannot override entity field {fld!r} (path {path!r})")
        for entity in doc.get("entities", []):
            if isinstance(entity, dict) and entity.get("id") == entity_id:
                return entity, fld
        raise ConfigError(f"no entity {entity_id!r} for override path {path!r}")
    if parts[0] == "sensors" and len(parts) == 3:
        _, index, fld = parts
        if not index.isdigit():
            raise ConfigError(f"sensor index must be numeric in {path!r}")
        if fld not in _SENSOR_FIELDS:
            raise ConfigError(f"cannot override sensor field {fld!r} (path {path!r})")
        sensors = doc.get("sensors", [])
        i = int(index)
        if i >= len(sensors):
            raise ConfigError(f"sensor index {i} out of range for override path {path!r}")
        return sensors[i], fld
    if path == "stop.timeout_s":
        return doc["stop"], "timeout_s"
    raise ConfigError(f"unresolvable override path {path!r}")


def expand_permutations(space: dict) -> list[dict]:
    """Cartesian product of the parameter space as a list of override dicts.

    Dimensions are sorted lexicographically by path; the rightmost varies
    fastest.  An empty space yields the single empty permutation.
    """
    if not space:
        return [{}]
    keys = sorted(space)
    return [
        dict(zip(keys, combo))
        for combo in itertools.product(*(space[k] for k in keys))
    ]


def run_id_for(index: int, total: int) -> str:
    width = max(3, len(str(total - 1)))
    return f"{index:0{width}d}"


def apply_overrides(base_doc: dict, overrides: dict, base_dir=".") -> dict:
    """Effective scenario document for one permutation."""
    if SCENARIO_FILE_KEY in overrides:
        base_doc = _load_scenario_doc(Path(base_dir) / overrides[SCENARIO_FILE_KEY])
    doc = copy.deepcopy(base_doc)
    for path in sorted(overrides):
        if path == SCENARIO_FILE_KEY:
            continue
        container, key = _resolve_override_path(doc, path)
        container[key] = overrides[path]
    return doc


def build_run_configs(
    general: GeneralSettings, space: dict, base_dir="."
) -> list[RunConfig]:
    """Expand and validate every permutation before anything executes."""
    base_dir = Path(base_dir)
    base_doc = None
    if SCENARIO_FILE_KEY not in space:
        base_doc = _load_scenario_doc(base_dir / general.scenario)
    permutations = expand_permutations(space)
    total = len(permutations)
    configs = []
    for i, overrides in enumerate(permutations):
        rid = run_id_for(i, total)
        source = base_doc if base_doc is not None else {}
        doc = apply_overrides(source, overrides, base_dir)
        try:
            spec = scenario_from_dict(doc)
        except ValidationError as exc:
            raise ConfigError(f"run {rid} (overrides {overrides!r}): {exc}") from exc
        configs.append(RunConfig(rid, general.seed + i, overrides, doc, spec))
    return configs


def _summary(rc: RunConfig, result: RunResult) -> dict:
    return {
        "run_id": rc.run_id,
        "overrides": rc.overrides,
        "end_reason": result.end_reason,
        "passed": result.passed,
        "artifact_dir": rc.run_id,
        "error": result.error,
    }


def execute_campaign(
    general: GeneralSettings,
    run_configs: list[RunConfig],
    max_parallel: int | None = None,
    output_dir=None,
) -> CampaignReport:
    """Execute all runs; artifacts are independent of the worker count.

    Each run gets its own bus, world, and run directory.  A run that errors
    is recorded as failed; the campaign itself always completes.
    """
    out_dir = Path(output_dir) if output_dir is not None else Path(
        general.output_dir if general.output_dir else default_output_dir()
    )
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory {out_dir}: {exc}") from exc

    workers = max_parallel if max_parallel is not None else general.max_parallel
    start = time.monotonic()

    def _one(rc: RunConfig) -> tuple[RunConfig, RunResult]:
        try:
            result = run_scenario(
                rc.spec,
                general,
                record_dir=out_dir / rc.run_id,
                run_id=rc.run_id,
                seed=rc.seed,
                scenario_doc=rc.doc,
                overrides=rc.overrides,
            )
        except Exception as exc:
            result = RunResult(
                scenario_name=rc.spec.name,
                end_reason=END_ERROR,
                ticks=0,
                end_time=0.0,
                error=f"{type(exc).__name__}: {exc}",
            )
        return rc, result

    if workers <= 1:
        outcomes = [_one(rc) for rc in run_configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one, run_configs))
    outcomes.sort(key=lambda pair: pair[0].run_id)

    completed = sum(1 for _, r in outcomes if r.end_reason != END_ERROR)
    failed = len(outcomes) - completed
    passed = sum(1 for _, r in outcomes if r.passed is True)
    failed_verdicts = sum(1 for _, r in outcomes if r.passed is False)
    report = CampaignReport(
        total=len(outcomes),
        completed=completed,
        failed=failed,
        passed_verdicts=passed,
        failed_verdicts=failed_verdicts,
        wall_time_s=round(time.monotonic() - start, 3),
        runs=[_summary(rc, r) for rc, r in outcomes],
    )
    (out_dir / "campaign_report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    try:
        from . import plots

        plots.render_campaign_summary(report.to_dict(), out_dir / "campaign_summary.png")
    except Exception:
        # Figures are a convenience; never fail the campaign over them.
        pass
    return report


def run_campaign_file(path, max_parallel: int | None = None) -> CampaignReport:
    """Parse, expand, validate, and execute a campaign document from disk."""
    path = Path(path)
    general, space = parse_campaign(path.read_text(encoding="utf-8"), path.parent)
    configs = build_run_configs(general, space, path.parent)
    return execute_campaign(general, configs, max_parallel=max_parallel)
