"""Simulation core: fixed-timestep kinematics, collision detection, and the
two built-in sensor models (object list and range scan).

The stepper is deliberately simple and fully deterministic: a speed-first
Euler update per entity, stations clamped to the path end, and simulation
time derived from the tick counter by multiplication.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from itertools import combinations
from typing import TYPE_CHECKING

from .errors import SensorError
from .world import (
    EntityState,
    Pose2D,
    WorldState,
    entity_from_decl,
    footprint_corners,
    normalize_angle,
    station_to_pose,
)

if TYPE_CHECKING:
    from .scenario import ScenarioSpec

OBJECT_LIST = "object_list"
RANGE_SCAN = "range_scan"

# Lower clamp keeping noisy ranges strictly positive.
_MIN_RANGE = 1e-9


@dataclass(frozen=True)
class StepConfig:
    dt: float
    collision_check: bool = True


@dataclass(frozen=True)
class SensorConfig:
    """One sensor declaration; ``beam_count`` and ``noise_stddev`` apply to
    range scans only."""

    kind: str
    mount_entity: str
    range_m: float
    fov: float
    topic: str
    beam_count: int | None = None
    noise_stddev: float | None = None


@dataclass(frozen=True)
class SensedObject:
    id: str
    pose: Pose2D
    speed: float
    length: float
    width: float


@dataclass(frozen=True)
class ObjectList:
    sim_time: float
    objects: tuple[SensedObject, ...]


@dataclass(frozen=True)
class RangeScan:
    sim_time: float
    origin: Pose2D
    angles: tuple[float, ...]
    ranges: tuple[float, ...]
    max_range: float


@dataclass(frozen=True)
class CollisionEvent:
    sim_time: float
    entity_a: str
    entity_b: str


def init_world(spec: "ScenarioSpec", seed: int) -> WorldState:
    """Construct the initial world for a scenario with a seeded random stream."""
    paths = {p.id: p for p in spec.paths}
    entities = {}
    for decl in spec.entities:
        entities[decl.id] = entity_from_decl(decl, paths)
    return WorldState(entities, paths, random.Random(seed))


def step(world: WorldState, cfg: StepConfig) -> tuple[WorldState, list[CollisionEvent]]:
    """Advance one tick.

    Speed-first update: the new speed is applied before integrating the
    station, so an accelerating entity moves at its post-update speed for the
    whole tick.  Entities reaching the path end hold there with speed 0.
    """
    dt = cfg.dt
    entities: dict[str, EntityState] = {}
    for eid, e in world.entities.items():
        if not e.alive:
            entities[eid] = e
            continue
        path = world.paths[e.path_id]
        dv = e.target_speed - e.speed
        dv = max(-e.max_decel * dt, min(e.max_accel * dt, dv))
        speed = e.speed + dv
        station = e.station + speed * dt
        end = path.cumulative_station[-1]
        if station >= end:
            station, speed = end, 0.0
        entities[eid] = replace(
            e, speed=speed, station=station, pose=station_to_pose(path, station)
        )
    tick = world.tick + 1
    out = WorldState(entities, world.paths, world.rng, tick, tick * dt)
    events = detect_collisions(out) if cfg.collision_check else []
    return out, events


def _projection_interval(corners, axis) -> tuple[float, float]:
    ax, ay = axis
    vals = [cx * ax + cy * ay for cx, cy in corners]
    return min(vals), max(vals)


def _rect_axes(corners):
    (x0, y0), (x1, y1), (x2, y2) = corners[0], corners[1], corners[2]
    for ex, ey in ((x1 - x0, y1 - y0), (x2 - x1, y2 - y1)):
        norm = math.hypot(ex, ey)
        yield (-ey / norm, ex / norm)


def rectangles_intersect(corners_a, corners_b) -> bool:
    """Separating-axis test for two oriented rectangles; touching counts."""
    for axis in (*_rect_axes(corners_a), *_rect_axes(corners_b)):
        amin, amax = _projection_interval(corners_a, axis)
        bmin, bmax = _projection_interval(corners_b, axis)
        if amax < bmin or bmax < amin:
            return False
    return True


def detect_collisions(world: WorldState) -> list[CollisionEvent]:
    """All colliding alive pairs, sorted by (entity_a, entity_b)."""
    alive = [world.entities[eid] for eid in sorted(world.entities) if world.entities[eid].alive]
    footprints = {e.id: footprint_corners(e) for e in alive}
    events = []
    for a, b in combinations(alive, 2):
        # Bounding-circle reject before the axis tests.
        reach = 0.5 * (math.hypot(a.length, a.width) + math.hypot(b.length, b.width))
        if math.dist((a.pose.x, a.pose.y), (b.pose.x, b.pose.y)) > reach:
            continue
        if rectangles_intersect(footprints[a.id], footprints[b.id]):
            events.append(CollisionEvent(world.sim_time, a.id, b.id))
    return events


def _mount(world: WorldState, cfg: SensorConfig) -> EntityState:
    e = world.entities.get(cfg.mount_entity)
    if e is None or not e.alive:
        raise SensorError(f"sensor mount entity {cfg.mount_entity!r} is missing or dead")
    return e


def sample_object_sensor(world: WorldState, cfg: SensorConfig) -> ObjectList:
    """Ground-truth object list: every other alive entity within range whose
    bearing lies inside the field of view.  No occlusion."""
    mount = _mount(world, cfg)
    objects = []
    for e in world.entities.values():
        if e.id == cfg.mount_entity or not e.alive:
            continue
        dx, dy = e.pose.x - mount.pose.x, e.pose.y - mount.pose.y
        if math.hypot(dx, dy) > cfg.range_m:
            continue
        bearing = normalize_angle(math.atan2(dy, dx) - mount.pose.heading)
        if abs(bearing) > 0.5 * cfg.fov:
            continue
        objects.append(SensedObject(e.id, e.pose, e.speed, e.length, e.width))
    return ObjectList(world.sim_time, tuple(objects))


def beam_angles(fov: float, beam_count: int) -> tuple[float, ...]:
    """Mount-frame beam angles, evenly spaced across the field of view."""
    if beam_count == 1:
        return (0.0,)
    step_a = fov / (beam_count - 1)
    return tuple(-0.5 * fov + i * step_a for i in range(beam_count))


def ray_rectangle_distance(ox, oy, dx, dy, corners) -> float | None:
    """Distance along the ray to the nearest edge of a rectangle, or None."""
    best = None
    for i in range(4):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % 4]
        ex, ey = x2 - x1, y2 - y1
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-12:
            continue
        qx, qy = x1 - ox, y1 - oy
        t = (qx * ey - qy * ex) / denom
        u = (qx * dy - qy * dx) / denom
        if t > 0.0 and 0.0 <= u <= 1.0 and (best is None or t < best):
            best = t
    return best


def sample_range_scan(world: WorldState, cfg: SensorConfig) -> RangeScan:
    """Planar range scan against the footprints of all other alive entities.

    Misses report exactly ``max_range``.  Gaussian noise is added to hit
    ranges only, clamped into (0, max_range]; draws consume the world random
    stream in beam order.
    """
    mount = _mount(world, cfg)
    origin = mount.pose
    targets = [
        footprint_corners(e)
        for e in world.entities.values()
        if e.id != cfg.mount_entity and e.alive
    ]
    noise = cfg.noise_stddev or 0.0
    ranges = []
    angles = beam_angles(cfg.fov, cfg.beam_count)
    for a in angles:
        ang = origin.heading + a
        dx, dy = math.cos(ang), math.sin(ang)
        best = cfg.range_m
        for corners in targets:
            t = ray_rectangle_distance(origin.x, origin.y, dx, dy, corners)
            if t is not None and t < best:
                best = t
        if best < cfg.range_m and noise > 0.0:
            best += world.rng.gauss(0.0, noise)
            best = max(_MIN_RANGE, min(best, cfg.range_m))
        ranges.append(best)
    return RangeScan(world.sim_time, origin, angles, tuple(ranges), cfg.range_m)
