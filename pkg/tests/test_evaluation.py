"""Metrics and criteria over hand-built traces.

Oracles: closed-form TTC arithmetic, an independently written greedy
matcher, and an exhaustive assignment enumeration for the small matching
example.
"""

import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scensim.bus import Message
from scensim.detector import DetectedObject, DetectedObjects
from scensim.errors import EvaluationError
from scensim.evaluation import (
    INFINITY_SENTINEL,
    CriterionSpec,
    MetricSpec,
    TickRecord,
    Trace,
    compute_metric,
    criterion_label,
    evaluate_criteria,
    match_detections,
    metric_label,
)
from scensim.simcore import CollisionEvent, ObjectList, SensedObject
from scensim.world import EntityState, Pose2D


def state(eid, station=0.0, speed=0.0, y=0.0, alive=True, length=4.5, path_id="lane"):
    return EntityState(
        id=eid,
        path_id=path_id,
        station=station,
        speed=speed,
        target_speed=speed,
        max_accel=3.0,
        max_decel=6.0,
        length=length,
        width=2.0,
        pose=Pose2D(station, y, 0.0),
        alive=alive,
    )


def make_trace(records, messages=None, dt=0.1):
    return Trace("t", dt, records=list(records), messages=messages or {})


def constant_speed_trace(specs, ticks, dt=0.1):
    """specs: list of (id, station0, speed). Entities move at constant speed."""
    records = []
    for k in range(ticks + 1):
        t = k * dt
        entities = {
            eid: state(eid, station=s0 + v * t, speed=v) for eid, s0, v in specs
        }
        records.append(TickRecord(k, t, entities, ()))
    return make_trace(records, dt=dt)


class TestCollisionCount:
    def test_counts_tick_pair_events(self):
        records = [
            TickRecord(0, 0.0, {"a": state("a")}, ()),
            TickRecord(1, 0.1, {"a": state("a")}, (CollisionEvent(0.1, "a", "b"),)),
            TickRecord(
                2,
                0.2,
                {"a": state("a")},
                (CollisionEvent(0.2, "a", "b"), CollisionEvent(0.2, "a", "c")),
            ),
        ]
        assert compute_metric(MetricSpec("collision_count"), make_trace(records)) == 3.0

    def test_zero_on_clean_trace(self):
        trace = constant_speed_trace([("a", 0.0, 1.0)], 5)
        assert compute_metric(MetricSpec("collision_count"), trace) == 0.0


class TestMinCenterDistance:
    def test_closing_entities(self):
        trace = constant_speed_trace([("a", 0.0, 10.0), ("b", 30.0, 0.0)], 20)
        spec = MetricSpec("min_center_distance", a="a", b="b")
        # Closest at the final tick: 30 - 10*2.0 = 10.
        assert compute_metric(spec, trace) == pytest.approx(10.0)

    def test_dead_ticks_skipped(self):
        near_but_dead = {
            "a": state("a", station=0.0),
            "b": state("b", station=1.0, alive=False),
        }
        far_alive = {"a": state("a", station=0.0), "b": state("b", station=50.0)}
        records = [
            TickRecord(0, 0.0, near_but_dead, ()),
            TickRecord(1, 0.1, far_alive, ()),
        ]
        spec = MetricSpec("min_center_distance", a="a", b="b")
        assert compute_metric(spec, make_trace(records)) == pytest.approx(50.0)

    def test_never_both_alive_gives_sentinel(self):
        records = [
            TickRecord(0, 0.0, {"a": state("a"), "b": state("b", alive=False)}, ())
        ]
        spec = MetricSpec("min_center_distance", a="a", b="b")
        assert compute_metric(spec, make_trace(records)) == INFINITY_SENTINEL

    def test_absent_entity_raises(self):
        trace = constant_speed_trace([("a", 0.0, 1.0)], 3)
        with pytest.raises(EvaluationError, match="ghost"):
            compute_metric(MetricSpec("min_center_distance", a="a", b="ghost"), trace)


class TestMinTtc:
    def test_closed_form_fifty_over_ten(self):
        # Bumper gap 50: centers 54.5 apart with two 4.5 m entities.
        trace = constant_speed_trace(
            [("rear", 0.0, 15.0), ("front", 54.5, 5.0)], 1, dt=0.1
        )
        spec = MetricSpec("min_ttc", a="rear", b="front")
        observed = compute_metric(spec, trace)
        # Tick 0: gap 50, closing 10 -> 5.0. Tick 1: gap 49 -> 4.9.
        assert observed == pytest.approx(4.9, abs=1e-9)
        assert abs(observed - 5.0) <= 0.1 + 1e-9

    def test_opening_gap_gives_sentinel(self):
        trace = constant_speed_trace(
            [("rear", 0.0, 5.0), ("front", 54.5, 15.0)], 5
        )
        spec = MetricSpec("min_ttc", a="rear", b="front")
        assert compute_metric(spec, trace) == INFINITY_SENTINEL

    def test_different_paths_ignored(self):
        records = []
        for k in range(3):
            entities = {
                "a": state("a", station=10.0 * k, speed=10.0, path_id="p1"),
                "b": state("b", station=54.5, speed=0.0, path_id="p2"),
            }
            records.append(TickRecord(k, 0.1 * k, entities, ()))
        spec = MetricSpec("min_ttc", a="a", b="b")
        assert compute_metric(spec, make_trace(records)) == INFINITY_SENTINEL

    def test_argument_order_irrelevant(self):
        trace = constant_speed_trace(
            [("rear", 0.0, 15.0), ("front", 54.5, 5.0)], 3
        )
        ab = compute_metric(MetricSpec("min_ttc", a="rear", b="front"), trace)
        ba = compute_metric(MetricSpec("min_ttc", a="front", b="rear"), trace)
        assert ab == ba


class TestGoalReached:
    def test_too_slow_for_deadline(self):
        # 100 m at 8 m/s needs 12.5 s; deadline 12.0.
        trace = constant_speed_trace([("ego", 0.0, 8.0)], 150, dt=0.1)
        spec = MetricSpec("goal_reached", entity="ego", station=100.0, by_time_s=12.0)
        assert compute_metric(spec, trace) == 0.0

    def test_reached_with_later_deadline(self):
        trace = constant_speed_trace([("ego", 0.0, 8.0)], 150, dt=0.1)
        spec = MetricSpec("goal_reached", entity="ego", station=100.0, by_time_s=13.0)
        assert compute_metric(spec, trace) == 1.0

    def test_deadline_boundary_inclusive(self):
        records = [
            TickRecord(0, 0.0, {"ego": state("ego", station=0.0)}, ()),
            TickRecord(1, 12.0, {"ego": state("ego", station=100.0)}, ()),
        ]
        spec = MetricSpec("goal_reached", entity="ego", station=100.0, by_time_s=12.0)
        assert compute_metric(spec, make_trace(records)) == 1.0

    def test_station_boundary_inclusive(self):
        records = [TickRecord(0, 0.0, {"ego": state("ego", station=100.0)}, ())]
        spec = MetricSpec("goal_reached", entity="ego", station=100.0, by_time_s=1.0)
        assert compute_metric(spec, make_trace(records)) == 1.0


class TestMaxSpeed:
    def test_max_over_ticks(self):
        records = [
            TickRecord(k, 0.1 * k, {"e": state("e", speed=v)}, ())
            for k, v in enumerate([0.0, 3.0, 7.5, 2.0])
        ]
        assert compute_metric(MetricSpec("max_speed", entity="e"), make_trace(records)) == 7.5

    def test_dead_ticks_not_counted(self):
        records = [
            TickRecord(0, 0.0, {"e": state("e", speed=3.0)}, ()),
            TickRecord(1, 0.1, {"e": state("e", speed=99.0, alive=False)}, ()),
        ]
        assert compute_metric(MetricSpec("max_speed", entity="e"), make_trace(records)) == 3.0


def greedy_match_oracle(det_pts, truth_pts, radius):
    """Independent restatement of the matching rule."""
    pairs = [
        (math.dist(d, t), i, j)
        for i, d in enumerate(det_pts)
        for j, t in enumerate(truth_pts)
        if math.dist(d, t) <= radius
    ]
    matched = []
    used_d, used_t = set(), set()
    for dist, i, j in sorted(pairs):
        if i not in used_d and j not in used_t:
            used_d.add(i)
            used_t.add(j)
            matched.append((i, j, dist))
    return matched


def exhaustive_best_assignment(det_pts, truth_pts, radius):
    """All one-to-one assignments; maximize matches, then minimize cost."""
    best = (0, 0.0)
    n, m = len(det_pts), len(truth_pts)
    for size in range(min(n, m), -1, -1):
        found = None
        for det_subset in itertools.permutations(range(n), size):
            for truth_subset in itertools.combinations(range(m), size):
                dists = [
                    math.dist(det_pts[di], truth_pts[ti])
                    for di, ti in zip(det_subset, truth_subset)
                ]
                if any(d > radius for d in dists):
                    continue
                cost = sum(d * d for d in dists)
                if found is None or cost < found:
                    found = cost
        if found is not None:
            return size, found
    return best


def _truth(points):
    objs = tuple(
        SensedObject(f"t{i}", Pose2D(x, y, 0.0), 0.0, 4.5, 2.0)
        for i, (x, y) in enumerate(points)
    )
    return ObjectList(0.0, objs)


def _dets(points):
    return DetectedObjects(
        0.0, tuple(DetectedObject((x, y), 1.0, 3) for x, y in points)
    )


class TestMatchDetections:
    def test_single_close_pair(self):
        result = match_detections(_dets([(0.2, 0.0)]), _truth([(0.0, 0.0)]), 0.5)
        assert (result.tp, result.fp, result.fn) == (1, 0, 0)
        assert result.sum_sq_position_error == pytest.approx(0.04)

    def test_no_detections(self):
        result = match_detections(_dets([]), _truth([(0, 0), (5, 0)]), 0.5)
        assert (result.tp, result.fp, result.fn) == (0, 0, 2)

    def test_no_truth(self):
        result = match_detections(_dets([(0, 0)]), _truth([]), 0.5)
        assert (result.tp, result.fp, result.fn) == (0, 1, 0)

    def test_outside_radius_unmatched(self):
        result = match_detections(_dets([(3.0, 0.0)]), _truth([(0.0, 0.0)]), 0.5)
        assert (result.tp, result.fp, result.fn) == (0, 1, 1)

    def test_crossed_pairs_match_exhaustive_optimum(self):
        # Crossed: detection i is nearest to truth 1-i.
        det = [(0.0, 0.0), (10.0, 0.0)]
        truth = [(9.0, 0.0), (1.0, 0.0)]
        result = match_detections(_dets(det), _truth(truth), 5.0)
        size, cost = exhaustive_best_assignment(det, truth, 5.0)
        assert result.tp == size == 2
        assert result.fp == result.fn == 0
        assert result.sum_sq_position_error == pytest.approx(cost)
        assert {(p[0], p[1]) for p in result.pairs} == {(0, 1), (1, 0)}

    def test_each_object_used_once(self):
        # Two detections near one truth: only the closer one matches.
        det = [(0.1, 0.0), (0.3, 0.0)]
        truth = [(0.0, 0.0)]
        result = match_detections(_dets(det), _truth(truth), 1.0)
        assert (result.tp, result.fp, result.fn) == (1, 1, 0)
        assert result.pairs[0][0] == 0  # the closer detection

    @given(
        st.lists(
            st.tuples(st.floats(-10, 10), st.floats(-10, 10)), max_size=3
        ),
        st.lists(
            st.tuples(st.floats(-10, 10), st.floats(-10, 10)), max_size=3
        ),
        st.floats(0.1, 8.0),
    )
    @settings(max_examples=200)
    def test_against_independent_greedy_oracle(self, det, truth, radius):
        result = match_detections(_dets(det), _truth(truth), radius)
        expected = greedy_match_oracle(det, truth, radius)
        assert result.tp == len(expected)
        assert result.fp == len(det) - len(expected)
        assert result.fn == len(truth) - len(expected)
        assert result.sum_sq_position_error == pytest.approx(
            sum(d * d for _, _, d in expected)
        )
        for (di, ti, dist) in result.pairs:
            assert dist <= radius


def detection_trace(frames, entity="ego"):
    """frames: list of (sim_time, truth_points, det_points or None)."""
    truth_msgs = []
    det_msgs = []
    records = [TickRecord(0, 0.0, {entity: state(entity)}, ())]
    for i, (t, truth_pts, det_pts) in enumerate(frames):
        truth_msgs.append(
            Message(f"/sensors/{entity}/objects", i, t, _truth(truth_pts))
        )
        if det_pts is not None:
            det_msgs.append(
                Message(f"/perception/{entity}/detections", i, t, _dets(det_pts))
            )
    messages = {f"/sensors/{entity}/objects": truth_msgs}
    if det_msgs:
        messages[f"/perception/{entity}/detections"] = det_msgs
    return make_trace(records, messages)


class TestDetectionMetrics:
    def test_perfect_detection(self):
        trace = detection_trace(
            [(0.1, [(5, 0)], [(5, 0)]), (0.2, [(6, 0)], [(6, 0)])]
        )
        p = compute_metric(MetricSpec("detection_precision", entity="ego", radius_m=1.0), trace)
        r = compute_metric(MetricSpec("detection_recall", entity="ego", radius_m=1.0), trace)
        rmse = compute_metric(
            MetricSpec("detection_position_rmse", entity="ego", radius_m=1.0), trace
        )
        assert (p, r, rmse) == (1.0, 1.0, 0.0)

    def test_missing_detection_message_counts_as_empty(self):
        trace = detection_trace([(0.1, [(5, 0)], None), (0.2, [(6, 0)], [(6, 0)])])
        r = compute_metric(MetricSpec("detection_recall", entity="ego", radius_m=1.0), trace)
        assert r == pytest.approx(0.5)

    def test_phantom_detections_hit_precision(self):
        trace = detection_trace([(0.1, [(5, 0)], [(5, 0), (20, 0)])])
        p = compute_metric(MetricSpec("detection_precision", entity="ego", radius_m=1.0), trace)
        r = compute_metric(MetricSpec("detection_recall", entity="ego", radius_m=1.0), trace)
        assert p == pytest.approx(0.5)
        assert r == 1.0

    def test_empty_denominator_conventions(self):
        trace = detection_trace([(0.1, [], None)])
        p = compute_metric(MetricSpec("detection_precision", entity="ego", radius_m=1.0), trace)
        r = compute_metric(MetricSpec("detection_recall", entity="ego", radius_m=1.0), trace)
        rmse = compute_metric(
            MetricSpec("detection_position_rmse", entity="ego", radius_m=1.0), trace
        )
        assert (p, r, rmse) == (1.0, 1.0, 0.0)

    def test_rmse_aggregates_over_ticks(self):
        trace = detection_trace(
            [(0.1, [(5, 0)], [(5.3, 0)]), (0.2, [(6, 0)], [(6.4, 0)])]
        )
        rmse = compute_metric(
            MetricSpec("detection_position_rmse", entity="ego", radius_m=1.0), trace
        )
        assert rmse == pytest.approx(math.sqrt((0.3**2 + 0.4**2) / 2))

    def test_no_truth_stream_raises(self):
        trace = make_trace([TickRecord(0, 0.0, {"ego": state("ego")}, ())])
        with pytest.raises(EvaluationError, match="ego"):
            compute_metric(
                MetricSpec("detection_recall", entity="ego", radius_m=1.0), trace
            )


class TestEvaluateCriteria:
    def _trace(self):
        return constant_speed_trace([("ego", 0.0, 12.0)], 10)

    def test_empty_criteria_pass(self):
        verdicts, overall = evaluate_criteria([], self._trace())
        assert verdicts == []
        assert overall is True

    def test_mixed_verdicts(self):
        crits = [
            CriterionSpec(MetricSpec("collision_count"), "==", 0.0),
            CriterionSpec(MetricSpec("max_speed", entity="ego"), "<=", 10.0),
        ]
        verdicts, overall = evaluate_criteria(crits, self._trace())
        assert [v.passed for v in verdicts] == [True, False]
        assert overall is False
        assert verdicts[1].observed == 12.0

    def test_verdict_soundness(self):
        import operator as op_mod

        ops = {"==": op_mod.eq, "!=": op_mod.ne, "<": op_mod.lt,
               "<=": op_mod.le, ">": op_mod.gt, ">=": op_mod.ge}
        crits = [
            CriterionSpec(MetricSpec("max_speed", entity="ego"), op, 12.0)
            for op in ops
        ]
        verdicts, _ = evaluate_criteria(crits, self._trace())
        for v in verdicts:
            assert v.passed == ops[v.criterion.op](v.observed, v.criterion.value)

    def test_order_invariance_of_overall(self):
        crits = [
            CriterionSpec(MetricSpec("collision_count"), "==", 0.0),
            CriterionSpec(MetricSpec("max_speed", entity="ego"), "<=", 10.0),
            CriterionSpec(MetricSpec("max_speed", entity="ego"), ">", 1.0),
        ]
        baseline = evaluate_criteria(crits, self._trace())[1]
        for perm in itertools.permutations(crits):
            assert evaluate_criteria(list(perm), self._trace())[1] == baseline

    def test_metric_error_fails_that_verdict(self):
        crits = [
            CriterionSpec(MetricSpec("collision_count"), "==", 0.0),
            CriterionSpec(MetricSpec("max_speed", entity="ghost"), "<=", 10.0),
        ]
        verdicts, overall = evaluate_criteria(crits, self._trace())
        assert verdicts[0].passed is True
        assert verdicts[1].passed is False
        assert verdicts[1].observed is None
        assert "ghost" in verdicts[1].error
        assert overall is False

    def test_verdicts_in_declaration_order(self):
        crits = [
            CriterionSpec(MetricSpec("max_speed", entity="ego"), ">", 1.0),
            CriterionSpec(MetricSpec("collision_count"), "==", 0.0),
        ]
        verdicts, _ = evaluate_criteria(crits, self._trace())
        assert [v.criterion for v in verdicts] == crits


class TestMonotonicity:
    @given(st.integers(2, 30), st.integers(0, 1000))
    @settings(max_examples=60)
    def test_prefix_monotonicity(self, ticks, seed):
        rng = random.Random(seed)
        records = []
        for k in range(ticks + 1):
            entities = {
                "a": state("a", station=rng.uniform(0, 100), speed=rng.uniform(0, 20)),
                "b": state("b", station=rng.uniform(0, 100), speed=rng.uniform(0, 20)),
            }
            collisions = (
                (CollisionEvent(0.1 * k, "a", "b"),) if rng.random() < 0.3 else ()
            )
            records.append(TickRecord(k, 0.1 * k, entities, collisions))
        prefix = make_trace(records[: ticks // 2 + 1])
        full = make_trace(records)

        for name, direction in [
            ("collision_count", 1),
            ("max_speed", 1),
            ("min_center_distance", -1),
            ("min_ttc", -1),
        ]:
            if name in ("collision_count",):
                spec = MetricSpec(name)
            elif name == "max_speed":
                spec = MetricSpec(name, entity="a")
            else:
                spec = MetricSpec(name, a="a", b="b")
            short = compute_metric(spec, prefix)
            long = compute_metric(spec, full)
            if direction > 0:
                assert long >= short
            else:
                assert long <= short


class TestLabels:
    def test_metric_labels(self):
        assert metric_label(MetricSpec("collision_count")) == "collision_count"
        assert metric_label(MetricSpec("min_ttc", a="x", b="y")) == "min_ttc[x,y]"
        assert metric_label(MetricSpec("max_speed", entity="e")) == "max_speed[e]"
        assert (
            metric_label(MetricSpec("goal_reached", entity="e", station=100.0,
                                    by_time_s=12.0))
            == "goal_reached[e,100,12]"
        )
        assert (
            metric_label(MetricSpec("detection_recall", entity="e", radius_m=2.0))
            == "detection_recall[e,2]"
        )

    def test_criterion_label(self):
        crit = CriterionSpec(MetricSpec("collision_count"), "==", 0.0)
        assert criterion_label(crit) == "collision_count == 0"
