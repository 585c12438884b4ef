"""Bus payload kinds and their JSON codecs.

Every payload that crosses the bus has a stable kind name and a round-trip
codec, so recordings can be replayed into the original dataclasses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .detector import DetectedObject, DetectedObjects
from .simcore import ObjectList, RangeScan, SensedObject
from .world import Pose2D, WorldState


@dataclass(frozen=True)
class Clock:
    tick: int


@dataclass(frozen=True)
class EntitySnapshot:
    id: str
    path: str
    station: float
    speed: float
    x: float
    y: float
    heading: float
    length: float
    width: float


@dataclass(frozen=True)
class WorldSnapshot:
    tick: int
    entities: tuple[EntitySnapshot, ...]


@dataclass(frozen=True)
class CollisionList:
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class ScenarioStatus:
    scenario: str
    state: str
    end_reason: str
    tick: int


def snapshot_world(world: WorldState) -> WorldSnapshot:
    """Ground-truth snapshot of all alive entities, in insertion order."""
    return WorldSnapshot(
        tick=world.tick,
        entities=tuple(
            EntitySnapshot(
                id=e.id,
                path=e.path_id,
                station=e.station,
                speed=e.speed,
                x=e.pose.x,
                y=e.pose.y,
                heading=e.pose.heading,
                length=e.length,
                width=e.width,
            )
            for e in world.entities.values()
            if e.alive
        ),
    )


def _encode_clock(p: Clock) -> dict:
    return {"tick": p.tick}


def _decode_clock(obj: dict) -> Clock:
    return Clock(tick=obj["tick"])


def _encode_world(p: WorldSnapshot) -> dict:
    return {
        "tick": p.tick,
        "entities": [
            {
                "id": e.id,
                "path": e.path,
                "station": e.station,
                "speed": e.speed,
                "x": e.x,
                "y": e.y,
                "heading": e.heading,
                "length": e.length,
                "width": e.width,
            }
            for e in p.entities
        ],
    }


def _decode_world(obj: dict) -> WorldSnapshot:
    return WorldSnapshot(
        tick=obj["tick"],
        entities=tuple(EntitySnapshot(**e) for e in obj["entities"]),
    )


def _encode_object_list(p: ObjectList) -> dict:
    return {
        "sim_time": p.sim_time,
        "objects": [
            {
                "id": o.id,
                "x": o.pose.x,
                "y": o.pose.y,
                "heading": o.pose.heading,
                "speed": o.speed,
                "length": o.length,
                "width": o.width,
            }
            for o in p.objects
        ],
    }


def _decode_object_list(obj: dict) -> ObjectList:
    return ObjectList(
        sim_time=obj["sim_time"],
        objects=tuple(
            SensedObject(
                id=o["id"],
                pose=Pose2D(o["x"], o["y"], o["heading"]),
                speed=o["speed"],
                length=o["length"],
                width=o["width"],
            )
            for o in obj["objects"]
        ),
    )


def _encode_scan(p: RangeScan) -> dict:
    return {
        "sim_time": p.sim_time,
        "origin": [p.origin.x, p.origin.y, p.origin.heading],
        "angles": list(p.angles),
        "ranges": list(p.ranges),
        "max_range": p.max_range,
    }


def _decode_scan(obj: dict) -> RangeScan:
    ox, oy, oh = obj["origin"]
    return RangeScan(
        sim_time=obj["sim_time"],
        origin=Pose2D(ox, oy, oh),
        angles=tuple(obj["angles"]),
        ranges=tuple(obj["ranges"]),
        max_range=obj["max_range"],
    )


def _encode_collisions(p: CollisionList) -> dict:
    return {"pairs": [[a, b] for a, b in p.pairs]}


def _decode_collisions(obj: dict) -> CollisionList:
    return CollisionList(pairs=tuple((a, b) for a, b in obj["pairs"]))


def _encode_detections(p: DetectedObjects) -> dict:
    return {
        "sim_time": p.sim_time,
        "objects": [
            {"x": o.center[0], "y": o.center[1], "extent": o.extent, "support": o.support}
            for o in p.objects
        ],
    }


def _decode_detections(obj: dict) -> DetectedObjects:
    return DetectedObjects(
        sim_time=obj["sim_time"],
        objects=tuple(
            DetectedObject((o["x"], o["y"]), o["extent"], o["support"])
            for o in obj["objects"]
        ),
    )


def _encode_status(p: ScenarioStatus) -> dict:
    return {
        "scenario": p.scenario,
        "state": p.state,
        "end_reason": p.end_reason,
        "tick": p.tick,
    }


def _decode_status(obj: dict) -> ScenarioStatus:
    return ScenarioStatus(**obj)


_CODECS = {
    "clock": (Clock, _encode_clock, _decode_clock),
    "objects": (WorldSnapshot, _encode_world, _decode_world),
    "object_list": (ObjectList, _encode_object_list, _decode_object_list),
    "scan": (RangeScan, _encode_scan, _decode_scan),
    "collisions": (CollisionList, _encode_collisions, _decode_collisions),
    "detections": (DetectedObjects, _encode_detections, _decode_detections),
    "status": (ScenarioStatus, _encode_status, _decode_status),
}

_KIND_BY_TYPE = {cls: kind for kind, (cls, _, _) in _CODECS.items()}


def payload_kind(payload) -> str:
    kind = _KIND_BY_TYPE.get(type(payload))
    if kind is None:
        raise TypeError(f"no payload kind registered for {type(payload).__name__}")
    return kind


def encode_payload(payload) -> dict:
    _, encode, _ = _CODECS[payload_kind(payload)]
    return encode(payload)


def decode_payload(kind: str, obj: dict):
    if kind not in _CODECS:
        raise KeyError(f"unknown payload kind {kind!r}")
    _, _, decode = _CODECS[kind]
    return decode(obj)
