"""Scenario documents: strict JSON parsing, validation, canonical
serialization, and the runtime semantics of conditions and actions.

Parsing is strict: unknown keys anywhere in the document are validation
errors, every reference must resolve, and error messages carry a document
path such as ``entities[1].path``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from typing import Union

from .bus import validate_topic
from .errors import (
    ActionError,
    ScenarioParseError,
    StationRangeError,
    TopicError,
    ValidationError,
)
from .evaluation import METRIC_NAMES, CriterionSpec, MetricSpec
from .simcore import OBJECT_LIST, RANGE_SCAN, SensorConfig
from .world import EntityDecl, PathModel, WorldState, entity_from_decl, station_to_pose

_ID_RE = re.compile(r"^[a-z0-9_]+$")


# --- condition types -------------------------------------------------------


@dataclass(frozen=True)
class SimTimeCondition:
    ge: float


@dataclass(frozen=True)
class ReachStationCondition:
    entity: str
    ge: float


@dataclass(frozen=True)
class RelativeDistanceCondition:
    a: str
    b: str
    le: float


@dataclass(frozen=True)
class SpeedCondition:
    entity: str
    ge: float | None = None
    le: float | None = None


@dataclass(frozen=True)
class AllOf:
    conditions: tuple["Condition", ...]


@dataclass(frozen=True)
class AnyOf:
    conditions: tuple["Condition", ...]


Condition = Union[
    SimTimeCondition,
    ReachStationCondition,
    RelativeDistanceCondition,
    SpeedCondition,
    AllOf,
    AnyOf,
]


# --- action types ----------------------------------------------------------


@dataclass(frozen=True)
class SetTargetSpeed:
    entity: str
    value: float


@dataclass(frozen=True)
class Teleport:
    entity: str
    path: str
    station: float


@dataclass(frozen=True)
class Spawn:
    declaration: EntityDecl


@dataclass(frozen=True)
class Despawn:
    entity: str


Action = Union[SetTargetSpeed, Teleport, Spawn, Despawn]


@dataclass(frozen=True)
class Event:
    """Edge-triggered: fires at most once, on the first tick the trigger holds."""

    name: str
    trigger: Condition
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class StopSpec:
    timeout_s: float
    any_of: tuple[Condition, ...] = ()


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    paths: tuple[PathModel, ...]
    entities: tuple[EntityDecl, ...]
    sensors: tuple[SensorConfig, ...]
    events: tuple[Event, ...]
    stop: StopSpec
    criteria: tuple[CriterionSpec, ...]

    def paths_by_id(self) -> dict[str, PathModel]:
        return {p.id: p for p in self.paths}


# --- runtime semantics -----------------------------------------------------


def _alive(world: WorldState, entity_id: str):
    e = world.entities.get(entity_id)
    return e if e is not None and e.alive else None


def eval_condition(cond: Condition, world: WorldState) -> bool:
    """Evaluate against post-step state.  Comparisons are inclusive; any leaf
    referencing a dead or unknown entity evaluates false."""
    if isinstance(cond, SimTimeCondition):
        return world.sim_time >= cond.ge
    if isinstance(cond, ReachStationCondition):
        e = _alive(world, cond.entity)
        return e is not None and e.station >= cond.ge
    if isinstance(cond, RelativeDistanceCondition):
        ea, eb = _alive(world, cond.a), _alive(world, cond.b)
        if ea is None or eb is None:
            return False
        return math.dist((ea.pose.x, ea.pose.y), (eb.pose.x, eb.pose.y)) <= cond.le
    if isinstance(cond, SpeedCondition):
        e = _alive(world, cond.entity)
        if e is None:
            return False
        if cond.ge is not None:
            return e.speed >= cond.ge
        return e.speed <= cond.le
    if isinstance(cond, AllOf):
        return all(eval_condition(c, world) for c in cond.conditions)
    if isinstance(cond, AnyOf):
        return any(eval_condition(c, world) for c in cond.conditions)
    raise TypeError(f"not a condition: {cond!r}")


def apply_action(action: Action, world: WorldState) -> WorldState:
    """Apply one action in place; raises ActionError when it cannot apply.

    The caller decides whether a failed action is fatal; the run loop logs
    and skips.
    """
    if isinstance(action, SetTargetSpeed):
        e = _alive(world, action.entity)
        if e is None:
            raise ActionError(f"set_target_speed: no alive entity {action.entity!r}")
        world.entities[action.entity] = replace(e, target_speed=action.value)
    elif isinstance(action, Teleport):
        e = _alive(world, action.entity)
        if e is None:
            raise ActionError(f"teleport: no alive entity {action.entity!r}")
        path = world.paths.get(action.path)
        if path is None:
            raise ActionError(f"teleport: unknown path {action.path!r}")
        try:
            pose = station_to_pose(path, action.station)
        except StationRangeError as exc:
            raise ActionError(f"teleport: {exc}") from exc
        world.entities[action.entity] = replace(
            e, path_id=action.path, station=float(action.station), pose=pose
        )
    elif isinstance(action, Spawn):
        decl = action.declaration
        if decl.id in world.entities:
            raise ActionError(f"spawn: entity id {decl.id!r} already in use")
        if decl.path not in world.paths:
            raise ActionError(f"spawn: unknown path {decl.path!r}")
        try:
            world.entities[decl.id] = entity_from_decl(decl, world.paths)
        except StationRangeError as exc:
            raise ActionError(f"spawn: {exc}") from exc
    elif isinstance(action, Despawn):
        e = _alive(world, action.entity)
        if e is None:
            raise ActionError(f"despawn: no alive entity {action.entity!r}")
        world.entities[action.entity] = replace(e, alive=False)
    else:
        raise TypeError(f"not an action: {action!r}")
    return world


# --- strict parsing --------------------------------------------------------


def _check_keys(obj, allowed, required, path):
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", path)
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"unknown key {key!r}", path)
    for key in required:
        if key not in obj:
            raise ValidationError(f"missing key {key!r}", path)


def _str_field(obj, key, path) -> str:
    v = obj[key]
    if not isinstance(v, str) or not v:
        raise ValidationError("expected a non-empty string", f"{path}.{key}")
    return v


def _num_field(obj, key, path, minimum=None, exclusive=False, default=None) -> float:
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError("expected a number", f"{path}.{key}")
    v = float(v)
    if minimum is not None and (v <= minimum if exclusive else v < minimum):
        op = ">" if exclusive else ">="
        raise ValidationError(f"must be {op} {minimum:g}", f"{path}.{key}")
    return v


def _int_field(obj, key, path, minimum=None) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError("expected an integer", f"{path}.{key}")
    if minimum is not None and v < minimum:
        raise ValidationError(f"must be >= {minimum}", f"{path}.{key}")
    return v


def _list_field(obj, key, path, default=None) -> list:
    if key not in obj:
        if default is not None:
            return default
    v = obj[key]
    if not isinstance(v, list):
        raise ValidationError("expected a list", f"{path}.{key}")
    return v


def _entity_id(obj, key, path) -> str:
    v = _str_field(obj, key, path)
    if not _ID_RE.match(v):
        raise ValidationError(
            "entity id must match [a-z0-9_]+", f"{path}.{key}"
        )
    return v


def _parse_paths(doc, path="map") -> tuple[PathModel, ...]:
    _check_keys(doc, {"paths"}, {"paths"}, path)
    raw = _list_field(doc, "paths", path)
    if not raw:
        raise ValidationError("needs at least one path", f"{path}.paths")
    out = []
    seen = set()
    for i, p in enumerate(raw):
        ppath = f"{path}.paths[{i}]"
        _check_keys(p, {"id", "points"}, {"id", "points"}, ppath)
        pid = _str_field(p, "id", ppath)
        if pid in seen:
            raise ValidationError(f"duplicate path id {pid!r}", f"{ppath}.id")
        seen.add(pid)
        points = _list_field(p, "points", ppath)
        if len(points) < 2:
            raise ValidationError("needs at least 2 points", f"{ppath}.points")
        coords = []
        for j, pt in enumerate(points):
            if (
                not isinstance(pt, list)
                or len(pt) != 2
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in pt)
            ):
                raise ValidationError(
                    "expected an [x, y] pair", f"{ppath}.points[{j}]"
                )
            coords.append((float(pt[0]), float(pt[1])))
        try:
            out.append(PathModel.from_points(pid, coords))
        except ValidationError as exc:
            raise ValidationError(str(exc).split(": ", 1)[-1], f"{ppath}.points") from exc
    return tuple(out)


_ENTITY_KEYS = {
    "id", "path", "station", "speed", "target_speed",
    "max_accel", "max_decel", "length", "width",
}


def _parse_entity(obj, path) -> EntityDecl:
    _check_keys(obj, _ENTITY_KEYS, {"id", "path", "station"}, path)
    return EntityDecl(
        id=_entity_id(obj, "id", path),
        path=_str_field(obj, "path", path),
        station=_num_field(obj, "station", path, minimum=0.0),
        speed=_num_field(obj, "speed", path, minimum=0.0, default=0.0),
        target_speed=_num_field(obj, "target_speed", path, minimum=0.0, default=0.0),
        max_accel=_num_field(obj, "max_accel", path, minimum=0.0, exclusive=True, default=3.0),
        max_decel=_num_field(obj, "max_decel", path, minimum=0.0, exclusive=True, default=6.0),
        length=_num_field(obj, "length", path, minimum=0.0, exclusive=True, default=4.5),
        width=_num_field(obj, "width", path, minimum=0.0, exclusive=True, default=2.0),
    )


_SENSOR_KEYS = {"kind", "mount_entity", "range", "fov", "topic", "beam_count", "noise_stddev"}


def _parse_sensor(obj, path) -> SensorConfig:
    _check_keys(obj, _SENSOR_KEYS, {"kind", "mount_entity", "range", "fov"}, path)
    kind = _str_field(obj, "kind", path)
    if kind not in (OBJECT_LIST, RANGE_SCAN):
        raise ValidationError(f"unknown sensor kind {kind!r}", f"{path}.kind")
    mount = _entity_id(obj, "mount_entity", path)
    range_m = _num_field(obj, "range", path, minimum=0.0, exclusive=True)
    fov = _num_field(obj, "fov", path, minimum=0.0, exclusive=True)
    if fov > 2.0 * math.pi + 1e-12:
        raise ValidationError("must be <= 2*pi", f"{path}.fov")
    beam_count = None
    noise = None
    if kind == RANGE_SCAN:
        if "beam_count" not in obj:
            raise ValidationError("missing key 'beam_count'", path)
        beam_count = _int_field(obj, "beam_count", path, minimum=1)
        noise = _num_field(obj, "noise_stddev", path, minimum=0.0, default=0.0)
    else:
        for key in ("beam_count", "noise_stddev"):
            if key in obj:
                raise ValidationError(
                    f"{key!r} applies to range_scan sensors only", f"{path}.{key}"
                )
    default_topic = f"/sensors/{mount}/" + ("scan" if kind == RANGE_SCAN else "objects")
    topic = obj.get("topic", default_topic)
    try:
        validate_topic(topic)
    except TopicError as exc:
        raise ValidationError(str(exc), f"{path}.topic") from exc
    return SensorConfig(
        kind=kind,
        mount_entity=mount,
        range_m=range_m,
        fov=fov,
        topic=topic,
        beam_count=beam_count,
        noise_stddev=noise,
    )


def _parse_condition(obj, path) -> Condition:
    if not isinstance(obj, dict):
        raise ValidationError("expected a condition object", path)
    ctype = obj.get("type")
    if ctype == "sim_time":
        _check_keys(obj, {"type", "ge"}, {"type", "ge"}, path)
        return SimTimeCondition(ge=_num_field(obj, "ge", path))
    if ctype == "reach_station":
        _check_keys(obj, {"type", "entity", "ge"}, {"type", "entity", "ge"}, path)
        return ReachStationCondition(
            entity=_str_field(obj, "entity", path), ge=_num_field(obj, "ge", path)
        )
    if ctype == "relative_distance":
        _check_keys(obj, {"type", "a", "b", "le"}, {"type", "a", "b", "le"}, path)
        return RelativeDistanceCondition(
            a=_str_field(obj, "a", path),
            b=_str_field(obj, "b", path),
            le=_num_field(obj, "le", path, minimum=0.0),
        )
    if ctype == "speed":
        _check_keys(obj, {"type", "entity", "ge", "le"}, {"type", "entity"}, path)
        has_ge, has_le = "ge" in obj, "le" in obj
        if has_ge == has_le:
            raise ValidationError("needs exactly one of 'ge' or 'le'", path)
        return SpeedCondition(
            entity=_str_field(obj, "entity", path),
            ge=_num_field(obj, "ge", path) if has_ge else None,
            le=_num_field(obj, "le", path) if has_le else None,
        )
    if ctype in ("all_of", "any_of"):
        _check_keys(obj, {"type", "conditions"}, {"type", "conditions"}, path)
        raw = _list_field(obj, "conditions", path)
        if not raw:
            raise ValidationError("needs at least one condition", f"{path}.conditions")
        conds = tuple(
            _parse_condition(c, f"{path}.conditions[{i}]") for i, c in enumerate(raw)
        )
        return AllOf(conds) if ctype == "all_of" else AnyOf(conds)
    raise ValidationError(f"unknown condition type {ctype!r}", path)


def _parse_action(obj, path) -> Action:
    if not isinstance(obj, dict):
        raise ValidationError("expected an action object", path)
    atype = obj.get("type")
    if atype == "set_target_speed":
        _check_keys(obj, {"type", "entity", "value"}, {"type", "entity", "value"}, path)
        return SetTargetSpeed(
            entity=_str_field(obj, "entity", path),
            value=_num_field(obj, "value", path, minimum=0.0),
        )
    if atype == "teleport":
        _check_keys(obj, {"type", "entity", "path", "station"}, {"type", "entity", "path", "station"}, path)
        return Teleport(
            entity=_str_field(obj, "entity", path),
            path=_str_field(obj, "path", path),
            station=_num_field(obj, "station", path, minimum=0.0),
        )
    if atype == "spawn":
        _check_keys(obj, {"type", "entity"}, {"type", "entity"}, path)
        return Spawn(declaration=_parse_entity(obj["entity"], f"{path}.entity"))
    if atype == "despawn":
        _check_keys(obj, {"type", "entity"}, {"type", "entity"}, path)
        return Despawn(entity=_str_field(obj, "entity", path))
    raise ValidationError(f"unknown action type {atype!r}", path)


def _parse_event(obj, path) -> Event:
    _check_keys(obj, {"name", "trigger", "actions"}, {"name", "trigger", "actions"}, path)
    raw_actions = _list_field(obj, "actions", path)
    if not raw_actions:
        raise ValidationError("needs at least one action", f"{path}.actions")
    return Event(
        name=_str_field(obj, "name", path),
        trigger=_parse_condition(obj["trigger"], f"{path}.trigger"),
        actions=tuple(
            _parse_action(a, f"{path}.actions[{i}]") for i, a in enumerate(raw_actions)
        ),
    )


def _parse_stop(obj, path) -> StopSpec:
    _check_keys(obj, {"any_of", "timeout_s"}, {"timeout_s"}, path)
    any_of = ()
    if "any_of" in obj:
        raw = _list_field(obj, "any_of", path)
        any_of = tuple(
            _parse_condition(c, f"{path}.any_of[{i}]") for i, c in enumerate(raw)
        )
    return StopSpec(
        timeout_s=_num_field(obj, "timeout_s", path, minimum=0.0, exclusive=True),
        any_of=any_of,
    )


_METRIC_KEYS = {
    "collision_count": set(),
    "min_center_distance": {"a", "b"},
    "min_ttc": {"a", "b"},
    "goal_reached": {"entity", "station", "by_time_s"},
    "max_speed": {"entity"},
    "detection_precision": {"entity", "radius_m"},
    "detection_recall": {"entity", "radius_m"},
    "detection_position_rmse": {"entity", "radius_m"},
}


def _parse_metric(obj, path) -> MetricSpec:
    if not isinstance(obj, dict):
        raise ValidationError("expected a metric object", path)
    name = obj.get("name")
    if name not in METRIC_NAMES:
        raise ValidationError(f"unknown metric {name!r}", f"{path}.name")
    params = _METRIC_KEYS[name]
    _check_keys(obj, params | {"name"}, params | {"name"}, path)
    kwargs = {"name": name}
    for key in params:
        if key in ("a", "b", "entity"):
            kwargs[key] = _str_field(obj, key, path)
        elif key == "radius_m":
            kwargs[key] = _num_field(obj, key, path, minimum=0.0, exclusive=True)
        else:
            kwargs[key] = _num_field(obj, key, path, minimum=0.0)
    return MetricSpec(**kwargs)


def _parse_criterion(obj, path) -> CriterionSpec:
    _check_keys(obj, {"metric", "op", "value"}, {"metric", "op", "value"}, path)
    op = _str_field(obj, "op", path)
    if op not in ("==", "!=", "<", "<=", ">", ">="):
        raise ValidationError(f"unknown comparison operator {op!r}", f"{path}.op")
    return CriterionSpec(
        metric=_parse_metric(obj["metric"], f"{path}.metric"),
        op=op,
        value=_num_field(obj, "value", path),
    )


# --- cross-reference validation -------------------------------------------


def _walk_condition_refs(cond, path, known):
    if isinstance(cond, (ReachStationCondition, SpeedCondition)):
        if cond.entity not in known:
            raise ValidationError(f"unknown entity {cond.entity!r}", f"{path}.entity")
    elif isinstance(cond, RelativeDistanceCondition):
        for key in ("a", "b"):
            eid = getattr(cond, key)
            if eid not in known:
                raise ValidationError(f"unknown entity {eid!r}", f"{path}.{key}")
    elif isinstance(cond, (AllOf, AnyOf)):
        for i, c in enumerate(cond.conditions):
            _walk_condition_refs(c, f"{path}.conditions[{i}]", known)


def _validate_refs(spec: ScenarioSpec) -> None:
    paths = spec.paths_by_id()
    known = {e.id for e in spec.entities}
    for event in spec.events:
        for action in event.actions:
            if isinstance(action, Spawn):
                known.add(action.declaration.id)

    for i, decl in enumerate(spec.entities):
        where = f"entities[{i}]"
        if decl.path not in paths:
            raise ValidationError(f"unknown path {decl.path!r}", f"{where}.path")
        if decl.station > paths[decl.path].length:
            raise ValidationError(
                f"station {decl.station:g} exceeds path length "
                f"{paths[decl.path].length:g}",
                f"{where}.station",
            )

    topics_seen = set()
    for i, sensor in enumerate(spec.sensors):
        where = f"sensors[{i}]"
        if sensor.mount_entity not in known:
            raise ValidationError(
                f"unknown entity {sensor.mount_entity!r}", f"{where}.mount_entity"
            )
        if sensor.topic in topics_seen:
            raise ValidationError(f"duplicate sensor topic {sensor.topic!r}", f"{where}.topic")
        topics_seen.add(sensor.topic)

    names_seen = set()
    for i, event in enumerate(spec.events):
        where = f"events[{i}]"
        if event.name in names_seen:
            raise ValidationError(f"duplicate event name {event.name!r}", f"{where}.name")
        names_seen.add(event.name)
        _walk_condition_refs(event.trigger, f"{where}.trigger", known)
        for j, action in enumerate(event.actions):
            apath = f"{where}.actions[{j}]"
            if isinstance(action, (SetTargetSpeed, Despawn)):
                if action.entity not in known:
                    raise ValidationError(f"unknown entity {action.entity!r}", f"{apath}.entity")
            elif isinstance(action, Teleport):
                if action.entity not in known:
                    raise ValidationError(f"unknown entity {action.entity!r}", f"{apath}.entity")
                if action.path not in paths:
                    raise ValidationError(f"unknown path {action.path!r}", f"{apath}.path")
                if action.station > paths[action.path].length:
                    raise ValidationError(
                        f"station {action.station:g} exceeds path length "
                        f"{paths[action.path].length:g}",
                        f"{apath}.station",
                    )
            elif isinstance(action, Spawn):
                decl = action.declaration
                if decl.path not in paths:
                    raise ValidationError(f"unknown path {decl.path!r}", f"{apath}.entity.path")
                if decl.station > paths[decl.path].length:
                    raise ValidationError(
                        f"station {decl.station:g} exceeds path length "
                        f"{paths[decl.path].length:g}",
                        f"{apath}.entity.station",
                    )

    for i, cond in enumerate(spec.stop.any_of):
        _walk_condition_refs(cond, f"stop.any_of[{i}]", known)

    for i, crit in enumerate(spec.criteria):
        where = f"criteria[{i}].metric"
        m = crit.metric
        for key in ("a", "b", "entity"):
            eid = getattr(m, key)
            if eid is not None and eid not in known:
                raise ValidationError(f"unknown entity {eid!r}", f"{where}.{key}")


# --- top level -------------------------------------------------------------

_TOP_KEYS = {"name", "map", "entities", "sensors", "events", "stop", "criteria"}


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    _check_keys(doc, _TOP_KEYS, {"name", "map", "entities", "stop"}, "scenario")
    name = _str_field(doc, "name", "scenario")
    paths = _parse_paths(doc["map"])

    raw_entities = _list_field(doc, "entities", "scenario")
    entities = []
    ids_seen = set()
    for i, obj in enumerate(raw_entities):
        decl = _parse_entity(obj, f"entities[{i}]")
        if decl.id in ids_seen:
            raise ValidationError(f"duplicate entity id {decl.id!r}", f"entities[{i}].id")
        ids_seen.add(decl.id)
        entities.append(decl)

    sensors = tuple(
        _parse_sensor(obj, f"sensors[{i}]")
        for i, obj in enumerate(_list_field(doc, "sensors", "scenario", default=[]))
    )
    events = tuple(
        _parse_event(obj, f"events[{i}]")
        for i, obj in enumerate(_list_field(doc, "events", "scenario", default=[]))
    )
    stop = _parse_stop(doc["stop"], "stop")
    criteria = tuple(
        _parse_criterion(obj, f"criteria[{i}]")
        for i, obj in enumerate(_list_field(doc, "criteria", "scenario", default=[]))
    )

    spec = ScenarioSpec(
        name=name,
        paths=paths,
        entities=tuple(entities),
        sensors=sensors,
        events=events,
        stop=stop,
        criteria=criteria,
    )
    _validate_refs(spec)
    return spec


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario document from JSON text."""
    return scenario_from_dict(parse_json_document(text))


def parse_json_document(text: str) -> dict:
    """JSON with position-annotated syntax errors."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, exc.lineno, exc.colno) from exc


# --- canonical serialization ----------------------------------------------


def _condition_to_dict(cond: Condition) -> dict:
    if isinstance(cond, SimTimeCondition):
        return {"type": "sim_time", "ge": cond.ge}
    if isinstance(cond, ReachStationCondition):
        return {"type": "reach_station", "entity": cond.entity, "ge": cond.ge}
    if isinstance(cond, RelativeDistanceCondition):
        return {"type": "relative_distance", "a": cond.a, "b": cond.b, "le": cond.le}
    if isinstance(cond, SpeedCondition):
        out = {"type": "speed", "entity": cond.entity}
        if cond.ge is not None:
            out["ge"] = cond.ge
        else:
            out["le"] = cond.le
        return out
    kind = "all_of" if isinstance(cond, AllOf) else "any_of"
    return {"type": kind, "conditions": [_condition_to_dict(c) for c in cond.conditions]}


def _entity_to_dict(decl: EntityDecl) -> dict:
    return {
        "id": decl.id,
        "path": decl.path,
        "station": decl.station,
        "speed": decl.speed,
        "target_speed": decl.target_speed,
        "max_accel": decl.max_accel,
        "max_decel": decl.max_decel,
        "length": decl.length,
        "width": decl.width,
    }


def _action_to_dict(action: Action) -> dict:
    if isinstance(action, SetTargetSpeed):
        return {"type": "set_target_speed", "entity": action.entity, "value": action.value}
    if isinstance(action, Teleport):
        return {
            "type": "teleport",
            "entity": action.entity,
            "path": action.path,
            "station": action.station,
        }
    if isinstance(action, Spawn):
        return {"type": "spawn", "entity": _entity_to_dict(action.declaration)}
    return {"type": "despawn", "entity": action.entity}


def _metric_to_dict(m: MetricSpec) -> dict:
    out = {"name": m.name}
    for key in ("entity", "a", "b", "radius_m", "station", "by_time_s"):
        v = getattr(m, key)
        if v is not None:
            out[key] = v
    return out


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Plain-dict form with all defaults materialized; reparses identically."""
    return {
        "name": spec.name,
        "map": {
            "paths": [
                {"id": p.id, "points": [[x, y] for x, y in p.points]}
                for p in spec.paths
            ]
        },
        "entities": [_entity_to_dict(e) for e in spec.entities],
        "sensors": [
            {
                "kind": s.kind,
                "mount_entity": s.mount_entity,
                "range": s.range_m,
                "fov": s.fov,
                "topic": s.topic,
                **(
                    {"beam_count": s.beam_count, "noise_stddev": s.noise_stddev}
                    if s.kind == RANGE_SCAN
                    else {}
                ),
            }
            for s in spec.sensors
        ],
        "events": [
            {
                "name": e.name,
                "trigger": _condition_to_dict(e.trigger),
                "actions": [_action_to_dict(a) for a in e.actions],
            }
            for e in spec.events
        ],
        "stop": {
            "any_of": [_condition_to_dict(c) for c in spec.stop.any_of],
            "timeout_s": spec.stop.timeout_s,
        },
        "criteria": [
            {"metric": _metric_to_dict(c.metric), "op": c.op, "value": c.value}
            for c in spec.criteria
        ],
    }


def serialize_scenario(spec: ScenarioSpec) -> str:
    return json.dumps(scenario_to_dict(spec), indent=2) + "\n"
