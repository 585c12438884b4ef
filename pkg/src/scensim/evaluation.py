"""Post-run evaluation: metrics over a recorded trace and pass/fail criteria.

A trace is the in-memory record of one run: per-tick entity state and
collision events plus every bus message, kept so metrics can be computed
after termination without re-running anything.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field

from .bus import Message
from .detector import DetectedObjects
from .errors import EvaluationError
from .simcore import CollisionEvent
from .world import EntityState

# Sentinel for "no finite value", serializable as a plain number.
INFINITY_SENTINEL = 1e18

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

METRIC_NAMES = (
    "collision_count",
    "min_center_distance",
    "min_ttc",
    "goal_reached",
    "max_speed",
    "detection_precision",
    "detection_recall",
    "detection_position_rmse",
)


@dataclass(frozen=True)
class MetricSpec:
    name: str
    entity: str | None = None
    a: str | None = None
    b: str | None = None
    radius_m: float | None = None
    station: float | None = None
    by_time_s: float | None = None


@dataclass(frozen=True)
class CriterionSpec:
    metric: MetricSpec
    op: str
    value: float


@dataclass(frozen=True)
class Verdict:
    criterion: CriterionSpec
    observed: float | None
    passed: bool
    error: str | None = None


@dataclass(frozen=True)
class TickRecord:
    tick: int
    sim_time: float
    entities: dict[str, EntityState]
    collisions: tuple[CollisionEvent, ...]


@dataclass
class Trace:
    scenario_name: str
    dt: float
    records: list[TickRecord] = field(default_factory=list)
    messages: dict[str, list[Message]] = field(default_factory=dict)


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    sum_sq_position_error: float
    pairs: tuple[tuple[int, int, float], ...]


def metric_label(spec: MetricSpec) -> str:
    if spec.name == "collision_count":
        return spec.name
    if spec.name in ("min_center_distance", "min_ttc"):
        return f"{spec.name}[{spec.a},{spec.b}]"
    if spec.name == "goal_reached":
        return f"goal_reached[{spec.entity},{spec.station:g},{spec.by_time_s:g}]"
    if spec.name == "max_speed":
        return f"max_speed[{spec.entity}]"
    return f"{spec.name}[{spec.entity},{spec.radius_m:g}]"


def criterion_label(crit: CriterionSpec) -> str:
    return f"{metric_label(crit.metric)} {crit.op} {crit.value:g}"


def _alive_pair(rec: TickRecord, a: str, b: str):
    ea, eb = rec.entities.get(a), rec.entities.get(b)
    if ea is None or eb is None or not ea.alive or not eb.alive:
        return None
    return ea, eb


def _require_present(trace: Trace, *entity_ids: str) -> None:
    for eid in entity_ids:
        if not any(eid in rec.entities for rec in trace.records):
            raise EvaluationError(f"entity {eid!r} absent from every tick of the trace")


def match_detections(detections, truth, radius_m: float) -> MatchResult:
    """Greedy nearest-first matching of detections to ground-truth objects.

    Candidate pairs within ``radius_m`` are taken in ascending center
    distance; each detection and each truth object is used at most once.
    """
    if isinstance(detections, DetectedObjects):
        det_pts = [d.center for d in detections.objects]
    else:
        det_pts = [d.center for d in detections]
    truth_objs = truth.objects if hasattr(truth, "objects") else truth
    truth_pts = [(o.pose.x, o.pose.y) for o in truth_objs]
    candidates = []
    for di, dp in enumerate(det_pts):
        for ti, tp in enumerate(truth_pts):
            dist = math.dist(dp, tp)
            if dist <= radius_m:
                candidates.append((dist, di, ti))
    candidates.sort()
    used_det, used_truth = set(), set()
    pairs = []
    for dist, di, ti in candidates:
        if di in used_det or ti in used_truth:
            continue
        used_det.add(di)
        used_truth.add(ti)
        pairs.append((di, ti, dist))
    tp_count = len(pairs)
    return MatchResult(
        tp=tp_count,
        fp=len(det_pts) - tp_count,
        fn=len(truth_pts) - tp_count,
        sum_sq_position_error=sum(d * d for _, _, d in pairs),
        pairs=tuple(pairs),
    )


def _detection_streams(trace: Trace, entity: str):
    truth_msgs = trace.messages.get(f"/sensors/{entity}/objects", [])
    if not truth_msgs:
        raise EvaluationError(
            f"no object-list ground truth recorded for entity {entity!r}"
        )
    det_by_time = {
        m.sim_time: m.payload
        for m in trace.messages.get(f"/perception/{entity}/detections", [])
    }
    return truth_msgs, det_by_time


def compute_metric(spec: MetricSpec, trace: Trace) -> float:
    if spec.name == "collision_count":
        return float(sum(len(rec.collisions) for rec in trace.records))

    if spec.name == "min_center_distance":
        _require_present(trace, spec.a, spec.b)
        best = None
        for rec in trace.records:
            pair = _alive_pair(rec, spec.a, spec.b)
            if pair is None:
                continue
            ea, eb = pair
            d = math.dist((ea.pose.x, ea.pose.y), (eb.pose.x, eb.pose.y))
            best = d if best is None else min(best, d)
        return best if best is not None else INFINITY_SENTINEL

    if spec.name == "min_ttc":
        _require_present(trace, spec.a, spec.b)
        best = None
        for rec in trace.records:
            pair = _alive_pair(rec, spec.a, spec.b)
            if pair is None:
                continue
            ea, eb = pair
            if ea.path_id != eb.path_id:
                continue
            follower, leader = (ea, eb) if ea.station <= eb.station else (eb, ea)
            closing = follower.speed - leader.speed
            if closing <= 0.0:
                continue
            gap = (leader.station - follower.station) - 0.5 * (ea.length + eb.length)
            ttc = gap / closing
            best = ttc if best is None else min(best, ttc)
        return best if best is not None else INFINITY_SENTINEL

    if spec.name == "goal_reached":
        _require_present(trace, spec.entity)
        for rec in trace.records:
            if rec.sim_time > spec.by_time_s:
                break
            e = rec.entities.get(spec.entity)
            if e is not None and e.alive and e.station >= spec.station:
                return 1.0
        return 0.0

    if spec.name == "max_speed":
        _require_present(trace, spec.entity)
        speeds = [
            e.speed
            for rec in trace.records
            if (e := rec.entities.get(spec.entity)) is not None and e.alive
        ]
        if not speeds:
            raise EvaluationError(f"entity {spec.entity!r} has no alive ticks")
        return max(speeds)

    if spec.name in ("detection_precision", "detection_recall", "detection_position_rmse"):
        truth_msgs, det_by_time = _detection_streams(trace, spec.entity)
        tp = fp = fn = 0
        sse = 0.0
        for tmsg in truth_msgs:
            det = det_by_time.get(tmsg.sim_time)
            det_objs = det.objects if det is not None else ()
            result = match_detections(det_objs, tmsg.payload, spec.radius_m)
            tp += result.tp
            fp += result.fp
            fn += result.fn
            sse += result.sum_sq_position_error
        if spec.name == "detection_precision":
            return tp / (tp + fp) if tp + fp else 1.0
        if spec.name == "detection_recall":
            return tp / (tp + fn) if tp + fn else 1.0
        return math.sqrt(sse / tp) if tp else 0.0

    raise EvaluationError(f"unknown metric {spec.name!r}")


def evaluate_criteria(
    criteria, trace: Trace
) -> tuple[list[Verdict], bool]:
    """Evaluate every criterion; overall pass requires all to pass.

    An empty criteria list passes.  A metric evaluation error fails that
    criterion with the error attached instead of aborting the run.
    """
    verdicts = []
    for crit in criteria:
        try:
            observed = compute_metric(crit.metric, trace)
            passed = bool(_OPS[crit.op](observed, crit.value))
            verdicts.append(Verdict(crit, observed, passed))
        except EvaluationError as exc:
            verdicts.append(Verdict(crit, None, False, error=str(exc)))
    return verdicts, all(v.passed for v in verdicts)
