"""Planar world model: poses, polyline paths addressed by arc length,
entity state, and oriented footprint rectangles.

Paths are immutable polylines; positions along a path are expressed as a
"station", the arc length from the first point.  All angles are radians.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass

from .errors import StationRangeError, ValidationError

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class Pose2D:
    """Position plus heading; heading is normalized on construction."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class PathModel:
    """Polyline centerline with precomputed cumulative arc length per vertex."""

    id: str
    points: tuple[tuple[float, float], ...]
    cumulative_station: tuple[float, ...]

    @classmethod
    def from_points(cls, path_id: str, points) -> "PathModel":
        pts = tuple((float(x), float(y)) for x, y in points)
        if len(pts) < 2:
            raise ValidationError("path needs at least 2 points", path_id)
        stations = [0.0]
        for i in range(1, len(pts)):
            seg = math.dist(pts[i - 1], pts[i])
            if seg <= 0.0:
                raise ValidationError(f"degenerate segment ending at point {i}", path_id)
            stations.append(stations[-1] + seg)
        return cls(path_id, pts, tuple(stations))

    @property
    def length(self) -> float:
        return self.cumulative_station[-1]


def path_length(path: PathModel) -> float:
    return path.cumulative_station[-1]


def station_to_pose(path: PathModel, station: float) -> Pose2D:
    """Pose at arc length ``station`` along the path.

    Heading follows the containing segment; at an interior vertex the
    outgoing segment wins.  Raises StationRangeError outside [0, length].
    """
    total = path.cumulative_station[-1]
    if not 0.0 <= station <= total:
        raise StationRangeError(
            f"station {station!r} outside [0, {total!r}] on path {path.id!r}"
        )
    seg = bisect.bisect_right(path.cumulative_station, station) - 1
    seg = min(seg, len(path.points) - 2)
    (x0, y0), (x1, y1) = path.points[seg], path.points[seg + 1]
    seg_len = path.cumulative_station[seg + 1] - path.cumulative_station[seg]
    frac = (station - path.cumulative_station[seg]) / seg_len
    return Pose2D(
        x0 + frac * (x1 - x0),
        y0 + frac * (y1 - y0),
        math.atan2(y1 - y0, x1 - x0),
    )


@dataclass(frozen=True)
class EntityDecl:
    """Initial parameters of one entity as declared in a scenario."""

    id: str
    path: str
    station: float
    speed: float = 0.0
    target_speed: float = 0.0
    max_accel: float = 3.0
    max_decel: float = 6.0
    length: float = 4.5
    width: float = 2.0


@dataclass(frozen=True)
class EntityState:
    """Kinematic state of one entity at a single tick."""

    id: str
    path_id: str
    station: float
    speed: float
    target_speed: float
    max_accel: float
    max_decel: float
    length: float
    width: float
    pose: Pose2D
    alive: bool = True


def entity_from_decl(decl: EntityDecl, paths: dict[str, PathModel]) -> EntityState:
    path = paths[decl.path]
    return EntityState(
        id=decl.id,
        path_id=decl.path,
        station=float(decl.station),
        speed=float(decl.speed),
        target_speed=float(decl.target_speed),
        max_accel=float(decl.max_accel),
        max_decel=float(decl.max_decel),
        length=float(decl.length),
        width=float(decl.width),
        pose=station_to_pose(path, float(decl.station)),
    )


# Body-frame corner offsets, counter-clockwise starting front-left.
_CORNER_SIGNS = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))


def footprint_corners(state: EntityState) -> tuple[tuple[float, float], ...]:
    """World-frame corners of the oriented footprint rectangle, CCW from front-left."""
    hl, hw = 0.5 * state.length, 0.5 * state.width
    c, s = math.cos(state.pose.heading), math.sin(state.pose.heading)
    x, y = state.pose.x, state.pose.y
    return tuple(
        (x + sx * hl * c - sy * hw * s, y + sx * hl * s + sy * hw * c)
        for sx, sy in _CORNER_SIGNS
    )


class WorldState:
    """All mutable per-run simulation state: entities, paths, time, and the
    single random stream sensors draw noise from.

    ``sim_time`` is always ``tick * dt`` computed fresh by the stepper, never
    accumulated.
    """

    __slots__ = ("tick", "sim_time", "entities", "paths", "rng")

    def __init__(
        self,
        entities: dict[str, EntityState],
        paths: dict[str, PathModel],
        rng: random.Random,
        tick: int = 0,
        sim_time: float = 0.0,
    ):
        self.entities = entities
        self.paths = paths
        self.rng = rng
        self.tick = tick
        self.sim_time = sim_time

    def copy(self) -> "WorldState":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return WorldState(dict(self.entities), self.paths, rng, self.tick, self.sim_time)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return (
            self.tick == other.tick
            and self.sim_time == other.sim_time
            and self.entities == other.entities
            and self.paths == other.paths
            and self.rng.getstate() == other.rng.getstate()
        )

    def __repr__(self) -> str:
        return (
            f"WorldState(tick={self.tick}, sim_time={self.sim_time}, "
            f"entities={sorted(self.entities)})"
        )
