"""Reference perception stage: clusters range-scan hits into detected objects.

Stateless per scan.  Hit beams are converted to world-frame points; runs of
adjacent hit beams whose consecutive points stay within ``gap_threshold``
form one cluster, and clusters smaller than ``min_cluster_size`` are
discarded.  Detections report the centroid of the visible (near) face, not
the object center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .simcore import RangeScan

DEFAULT_GAP_THRESHOLD = 1.0
DEFAULT_MIN_CLUSTER_SIZE = 2


@dataclass(frozen=True)
class DetectedObject:
    center: tuple[float, float]
    extent: float
    support: int


@dataclass(frozen=True)
class DetectedObjects:
    sim_time: float
    objects: tuple[DetectedObject, ...]


def scan_hit_points(scan: RangeScan) -> dict[int, tuple[float, float]]:
    """World-frame hit point per beam index; misses are absent."""
    points = {}
    for i, r in enumerate(scan.ranges):
        if r >= scan.max_range:
            continue
        ang = scan.origin.heading + scan.angles[i]
        points[i] = (
            scan.origin.x + r * math.cos(ang),
            scan.origin.y + r * math.sin(ang),
        )
    return points


def cluster_scan(
    scan: RangeScan,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
) -> list[list[int]]:
    """Group hit beams into clusters of beam indices.

    Only adjacent hit beams can share a cluster, and only while the distance
    between their hit points stays within the gap threshold.  No wrap-around
    between the first and last beam.
    """
    points = scan_hit_points(scan)
    clusters: list[list[int]] = []
    current: list[int] = []
    prev_index = None
    for i in sorted(points):
        pt = points[i]
        if (
            current
            and i == prev_index + 1
            and math.dist(points[prev_index], pt) <= gap_threshold
        ):
            current.append(i)
        else:
            if current:
                clusters.append(current)
            current = [i]
        prev_index = i
    if current:
        clusters.append(current)
    return [c for c in clusters if len(c) >= min_cluster_size]


def clusters_to_objects(scan: RangeScan, clusters: list[list[int]]) -> DetectedObjects:
    """Summarize clusters: centroid of hit points, max pairwise spread, size."""
    points = scan_hit_points(scan)
    objects = []
    for cluster in clusters:
        pts = [points[i] for i in cluster]
        cx = sum(p[0] for p in pts) / len(pts)
        cy = sum(p[1] for p in pts) / len(pts)
        extent = 0.0
        for j in range(len(pts)):
            for k in range(j + 1, len(pts)):
                extent = max(extent, math.dist(pts[j], pts[k]))
        objects.append(DetectedObject((cx, cy), extent, len(pts)))
    return DetectedObjects(scan.sim_time, tuple(objects))


def attach_detector(
    bus,
    entity: str,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
):
    """Subscribe a detector for one entity's scan topic.

    Each scan on ``/sensors/<entity>/scan`` produces one message on
    ``/perception/<entity>/detections`` at the same sim time.
    """
    out_topic = f"/perception/{entity}/detections"

    def on_scan(msg):
        detections = clusters_to_objects(
            msg.payload, cluster_scan(msg.payload, gap_threshold, min_cluster_size)
        )
        bus.publish(out_topic, detections, sim_time=msg.sim_time)

    return bus.subscribe(f"/sensors/{entity}/scan", on_scan)
