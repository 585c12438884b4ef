"""Scan clustering and the detector stage wired to the bus.

Oracle for face-center accuracy: shapely ray casting against the target
rectangle, entirely independent of the production ray code.
"""

import math
import random

import pytest
from shapely.geometry import Polygon

from scensim.bus import MessageBus
from scensim.detector import (
    DetectedObjects,
    attach_detector,
    cluster_scan,
    clusters_to_objects,
    scan_hit_points,
)
from scensim.simcore import RangeScan, SensorConfig, sample_range_scan
from scensim.world import EntityDecl, PathModel, Pose2D, WorldState, entity_from_decl


def synthetic_scan(ranges, max_range=50.0, fov=math.pi / 2, origin=None):
    n = len(ranges)
    if n == 1:
        angles = (0.0,)
    else:
        step = fov / (n - 1)
        angles = tuple(-fov / 2 + i * step for i in range(n))
    return RangeScan(
        sim_time=0.0,
        origin=origin or Pose2D(0.0, 0.0, 0.0),
        angles=angles,
        ranges=tuple(ranges),
        max_range=max_range,
    )


def scan_world(targets, origin=(0.0, 0.0), beam_count=181, fov=math.pi / 2,
               range_m=50.0, seed=0):
    """World with ego at origin heading 0 and box targets at given centers."""
    paths = {"ego_path": PathModel.from_points("ego_path", [origin, (origin[0] + 500, origin[1])])}
    entities = {"ego": entity_from_decl(EntityDecl("ego", "ego_path", 0.0), paths)}
    for i, (cx, cy) in enumerate(targets):
        pid = f"t{i}"
        paths[pid] = PathModel.from_points(pid, [(cx - 50.0, cy), (cx + 450.0, cy)])
        entities[f"car{i}"] = entity_from_decl(EntityDecl(f"car{i}", pid, 50.0), paths)
    world = WorldState(entities, paths, random.Random(seed))
    cfg = SensorConfig(
        kind="range_scan", mount_entity="ego", range_m=range_m, fov=fov,
        topic="/sensors/ego/scan", beam_count=beam_count, noise_stddev=0.0,
    )
    return world, cfg


def near_face_center(origin, corners):
    """Oracle: midpoint of the rectangle face whose midpoint is nearest the
    sensor (the visible face for these unoccluded layouts)."""
    edges = list(zip(corners, tuple(corners[1:]) + (corners[0],)))
    midpoints = [((x0 + x1) / 2, (y0 + y1) / 2) for (x0, y0), (x1, y1) in edges]
    return min(midpoints, key=lambda m: math.dist(m, origin))


class TestClusterScan:
    def test_hand_layout_two_clusters(self):
        # Beams: miss, hit, hit, hit, miss, miss, hit, hit.
        ranges = [50.0, 10.0, 10.1, 10.2, 50.0, 50.0, 20.0, 20.1]
        scan = synthetic_scan(ranges, fov=math.radians(7))  # ~1 degree spacing
        clusters = cluster_scan(scan, gap_threshold=1.0, min_cluster_size=2)
        assert clusters == [[1, 2, 3], [6, 7]]

    def test_min_cluster_size_filters_singletons(self):
        ranges = [50.0, 10.0, 50.0, 20.0, 20.1, 50.0]
        scan = synthetic_scan(ranges, fov=math.radians(5))
        assert cluster_scan(scan, min_cluster_size=2) == [[3, 4]]
        assert cluster_scan(scan, min_cluster_size=1) == [[1], [3, 4]]

    def test_gap_threshold_splits_depth_jumps(self):
        # Adjacent beams but a large range discontinuity.
        ranges = [10.0, 10.05, 30.0, 30.05]
        scan = synthetic_scan(ranges, fov=math.radians(3))
        clusters = cluster_scan(scan, gap_threshold=1.0, min_cluster_size=2)
        assert clusters == [[0, 1], [2, 3]]

    def test_no_wrap_around(self):
        # First and last beams hit at the same range; interior misses.
        ranges = [10.0, 10.01, 50.0, 10.0, 10.01]
        scan = synthetic_scan(ranges, fov=math.radians(4))
        clusters = cluster_scan(scan, min_cluster_size=2)
        assert clusters == [[0, 1], [3, 4]]

    def test_all_misses_no_clusters(self):
        scan = synthetic_scan([50.0] * 8)
        assert cluster_scan(scan) == []
        assert scan_hit_points(scan) == {}


class TestClustersToObjects:
    def test_centroid_extent_support(self):
        scan = synthetic_scan([50.0, 10.0, 10.0, 10.0], fov=math.radians(3))
        points = scan_hit_points(scan)
        detections = clusters_to_objects(scan, [[1, 2, 3]])
        assert len(detections.objects) == 1
        obj = detections.objects[0]
        assert obj.support == 3
        pts = [points[i] for i in (1, 2, 3)]
        cx = sum(p[0] for p in pts) / 3
        cy = sum(p[1] for p in pts) / 3
        assert obj.center == pytest.approx((cx, cy))
        assert obj.extent == pytest.approx(math.dist(pts[0], pts[2]))

    def test_empty_clusters(self):
        scan = synthetic_scan([50.0] * 4)
        assert clusters_to_objects(scan, []).objects == ()


class TestDetectorOnSampledScans:
    def test_face_center_within_half_meter(self):
        world, cfg = scan_world([(15.0, 3.0), (30.0, -3.0)])
        scan = sample_range_scan(world, cfg)
        detections = clusters_to_objects(scan, cluster_scan(scan))
        assert len(detections.objects) == 2
        from scensim.world import footprint_corners

        expected = []
        for car in ("car0", "car1"):
            corners = footprint_corners(world.entities[car])
            expected.append(near_face_center((0.0, 0.0), corners))
        got = sorted(obj.center for obj in detections.objects)
        want = sorted(expected)
        for g, w in zip(got, want):
            assert math.dist(g, w) <= 0.5

    def test_every_unoccluded_target_detected(self):
        world, cfg = scan_world([(12.0, 4.0), (25.0, 0.0), (35.0, -6.0)])
        scan = sample_range_scan(world, cfg)
        detections = clusters_to_objects(scan, cluster_scan(scan))
        assert len(detections.objects) == 3

    def test_no_phantom_objects(self):
        # Detections must stay near some real entity: no cluster invents one.
        world, cfg = scan_world([(15.0, 3.0), (30.0, -3.0)])
        scan = sample_range_scan(world, cfg)
        detections = clusters_to_objects(scan, cluster_scan(scan))
        centers = [(world.entities[c].pose.x, world.entities[c].pose.y)
                   for c in ("car0", "car1")]
        for obj in detections.objects:
            assert min(math.dist(obj.center, c) for c in centers) <= 3.0

    def test_empty_world_no_detections(self):
        world, cfg = scan_world([])
        scan = sample_range_scan(world, cfg)
        assert clusters_to_objects(scan, cluster_scan(scan)).objects == ()

    def test_translation_equivariance(self):
        # Binary-exact offset so float arithmetic shifts without rounding.
        offset = (256.0, -128.0)
        world_a, cfg_a = scan_world([(15.0, 3.0), (30.0, -3.0)])
        world_b, cfg_b = scan_world(
            [(15.0 + offset[0], 3.0 + offset[1]), (30.0 + offset[0], -3.0 + offset[1])],
            origin=offset,
        )
        scan_a = sample_range_scan(world_a, cfg_a)
        scan_b = sample_range_scan(world_b, cfg_b)
        det_a = clusters_to_objects(scan_a, cluster_scan(scan_a))
        det_b = clusters_to_objects(scan_b, cluster_scan(scan_b))
        assert len(det_a.objects) == len(det_b.objects)
        for oa, ob in zip(det_a.objects, det_b.objects):
            assert ob.center[0] - oa.center[0] == pytest.approx(offset[0], abs=1e-9)
            assert ob.center[1] - oa.center[1] == pytest.approx(offset[1], abs=1e-9)
            assert ob.support == oa.support
            assert ob.extent == pytest.approx(oa.extent, abs=1e-9)


class TestAttachDetector:
    def test_scan_in_detections_out(self):
        bus = MessageBus()
        received = []
        bus.subscribe("/perception/ego/detections", lambda m: received.append(m))
        attach_detector(bus, "ego")
        world, cfg = scan_world([(15.0, 3.0)])
        scan = sample_range_scan(world, cfg)
        bus.publish("/sensors/ego/scan", scan, 0.25)
        assert len(received) == 1
        msg = received[0]
        assert msg.sim_time == 0.25
        assert isinstance(msg.payload, DetectedObjects)
        assert len(msg.payload.objects) == 1

    def test_detector_ignores_other_entities(self):
        bus = MessageBus()
        received = []
        bus.subscribe("/perception/ego/detections", lambda m: received.append(m))
        attach_detector(bus, "ego")
        world, cfg = scan_world([(15.0, 3.0)])
        scan = sample_range_scan(world, cfg)
        bus.publish("/sensors/other/scan", scan, 0.1)
        assert received == []
