"""Scenario execution: the per-tick loop, bus wiring, recording, metrics,
and the synchronous ``scenario.execute`` service.

Tick order is fixed: step the world, publish (clock, objects, collisions,
then sensors in declaration order), evaluate unfired events in document
order, then check stop conditions.  Nothing is published past the
termination tick's time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bus import (
    CLOCK_TOPIC,
    COLLISIONS_TOPIC,
    MessageBus,
    OBJECTS_TOPIC,
    STATUS_TOPIC,
)
from .config import GeneralSettings, config_hash
from .detector import attach_detector
from .errors import SensorError, SimError
from .evaluation import (
    MetricSpec,
    TickRecord,
    Trace,
    compute_metric,
    evaluate_criteria,
    metric_label,
)
from .payloads import Clock, CollisionList, ScenarioStatus, snapshot_world
from .recorder import start_capture
from .scenario import (
    ScenarioSpec,
    apply_action,
    eval_condition,
    parse_scenario,
    scenario_to_dict,
)
from .simcore import (
    RANGE_SCAN,
    StepConfig,
    init_world,
    sample_object_sensor,
    sample_range_scan,
    step,
)

END_STOP_CONDITION = "stop_condition"
END_TIMEOUT = "timeout"
END_ERROR = "error"

SCENARIO_EXECUTE_SERVICE = "scenario.execute"


@dataclass(frozen=True)
class ActionLogEntry:
    tick: int
    event: str
    action_index: int
    applied: bool
    error: str | None = None


@dataclass
class RunOutcome:
    trace: Trace
    end_reason: str
    ticks: int
    end_time: float
    action_log: list[ActionLogEntry]
    errors: list[str]


@dataclass
class RunResult:
    scenario_name: str
    end_reason: str
    ticks: int
    end_time: float
    metrics: dict[str, float] = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    passed: bool | None = None
    artifact_dir: str | None = None
    error: str | None = None
    run_errors: list[str] = field(default_factory=list)
    trace: Trace | None = field(default=None, repr=False, compare=False)


def prepare_bus(spec: ScenarioSpec, bus: MessageBus) -> None:
    """Attach the reference detector for every range-scan sensor."""
    for sensor in spec.sensors:
        if sensor.kind == RANGE_SCAN:
            attach_detector(bus, sensor.mount_entity)


def run_loop(
    spec: ScenarioSpec, general: GeneralSettings, bus: MessageBus, seed: int
) -> RunOutcome:
    """Execute the tick loop until a stop condition or the timeout holds."""
    world = init_world(spec, seed)
    step_cfg = StepConfig(dt=general.dt, collision_check=True)
    timeout_s = general.duration_s if general.duration_s is not None else spec.stop.timeout_s

    trace = Trace(spec.name, general.dt)
    bus.add_tap(lambda msg: trace.messages.setdefault(msg.topic, []).append(msg))
    trace.records.append(TickRecord(0, 0.0, dict(world.entities), ()))

    fired: set[str] = set()
    action_log: list[ActionLogEntry] = []
    errors: list[str] = []
    end_reason = None

    while end_reason is None:
        world, collisions = step(world, step_cfg)
        t = world.sim_time
        trace.records.append(
            TickRecord(world.tick, t, dict(world.entities), tuple(collisions))
        )

        bus.publish(CLOCK_TOPIC, Clock(world.tick), t)
        bus.publish(OBJECTS_TOPIC, snapshot_world(world), t)
        bus.publish(
            COLLISIONS_TOPIC,
            CollisionList(tuple((c.entity_a, c.entity_b) for c in collisions)),
            t,
        )
        for sensor in spec.sensors:
            try:
                if sensor.kind == RANGE_SCAN:
                    payload = sample_range_scan(world, sensor)
                else:
                    payload = sample_object_sensor(world, sensor)
            except SensorError as exc:
                errors.append(f"tick {world.tick}: {exc}")
                continue
            bus.publish(sensor.topic, payload, t)

        for event in spec.events:
            if event.name in fired or not eval_condition(event.trigger, world):
                continue
            fired.add(event.name)
            for idx, action in enumerate(event.actions):
                try:
                    apply_action(action, world)
                    action_log.append(ActionLogEntry(world.tick, event.name, idx, True))
                except SimError as exc:
                    errors.append(f"tick {world.tick} event {event.name!r}: {exc}")
                    action_log.append(
                        ActionLogEntry(world.tick, event.name, idx, False, str(exc))
                    )

        if any(eval_condition(c, world) for c in spec.stop.any_of):
            end_reason = END_STOP_CONDITION
        elif t >= timeout_s:
            end_reason = END_TIMEOUT

    for failure in bus.delivery_failures:
        errors.append(
            f"subscriber failure on {failure.topic}#{failure.seq}: {failure.error}"
        )
    return RunOutcome(trace, end_reason, world.tick, world.sim_time, action_log, errors)


def _evaluate(spec: ScenarioSpec, trace: Trace):
    metrics: dict[str, float] = {}
    try:
        metrics["collision_count"] = compute_metric(MetricSpec("collision_count"), trace)
    except SimError:
        pass
    verdicts, overall = evaluate_criteria(spec.criteria, trace)
    for v in verdicts:
        if v.observed is not None:
            metrics[metric_label(v.criterion.metric)] = v.observed
    passed = overall if spec.criteria else None
    return metrics, verdicts, passed


def _run_services(services, record_dir, errors: list[str]) -> None:
    if not services:
        return
    if record_dir is None:
        errors.append("post-run services requested without a recording directory")
        return
    from .recorder import export_csv, load_recording

    recording = load_recording(record_dir)
    for service in services:
        if service == "csv_export":
            for topic in recording.topics():
                export_csv(recording, topic)
        elif service == "plot":
            from . import plots

            plots.render_run_figures(recording, Path(record_dir) / "export")
        else:
            errors.append(f"unknown post-run service {service!r}")


def run_scenario(
    spec: ScenarioSpec,
    general: GeneralSettings,
    bus: MessageBus | None = None,
    record_dir=None,
    run_id: str = "run",
    seed: int | None = None,
    scenario_doc: dict | None = None,
    overrides: dict | None = None,
    keep_trace: bool = False,
) -> RunResult:
    """Execute one scenario end to end.

    With ``record_dir`` set, the effective config and all captured topics are
    written there and the manifest finalized.  Failures after setup are
    reported in the result with end_reason "error", never raised.
    """
    bus = bus if bus is not None else MessageBus()
    seed = general.seed if seed is None else seed

    capture = None
    cfg_hash = ""
    artifact_dir = None
    if record_dir is not None:
        record_dir = Path(record_dir)
        doc = scenario_doc if scenario_doc is not None else scenario_to_dict(spec)
        config_payload = {
            "dt": general.dt,
            "duration_s": general.duration_s,
            "overrides": overrides or {},
            "record_topics": list(general.record_topics),
            "scenario": doc,
            "seed": seed,
        }
        cfg_hash = config_hash(config_payload)
        capture = start_capture(bus, general.record_topics, record_dir)
        (record_dir / "config.json").write_text(
            json.dumps({"run_id": run_id, "config": config_payload}, indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )
        artifact_dir = str(record_dir)

    try:
        prepare_bus(spec, bus)
        outcome = run_loop(spec, general, bus, seed)
        bus.publish(
            STATUS_TOPIC,
            ScenarioStatus(spec.name, "finished", outcome.end_reason, outcome.ticks),
            outcome.end_time,
        )
        metrics, verdicts, passed = _evaluate(spec, outcome.trace)
        run_errors = list(outcome.errors)
        if capture is not None:
            capture.finalize(
                run_id=run_id,
                scenario_name=spec.name,
                config_hash=cfg_hash,
                seed=seed,
                dt=general.dt,
                end_reason=outcome.end_reason,
            )
        _run_services(general.services, record_dir, run_errors)
        return RunResult(
            scenario_name=spec.name,
            end_reason=outcome.end_reason,
            ticks=outcome.ticks,
            end_time=outcome.end_time,
            metrics=metrics,
            verdicts=verdicts,
            passed=passed,
            artifact_dir=artifact_dir,
            run_errors=run_errors,
            trace=outcome.trace if keep_trace else None,
        )
    except Exception as exc:
        if capture is not None:
            try:
                capture.finalize(
                    run_id=run_id,
                    scenario_name=spec.name,
                    config_hash=cfg_hash,
                    seed=seed,
                    dt=general.dt,
                    end_reason=END_ERROR,
                )
            except Exception:
                pass
        return RunResult(
            scenario_name=spec.name,
            end_reason=END_ERROR,
            ticks=0,
            end_time=0.0,
            artifact_dir=artifact_dir,
            error=f"{type(exc).__name__}: {exc}",
        )


def install_scenario_service(bus: MessageBus, general: GeneralSettings) -> None:
    """Register ``scenario.execute``: runs a scenario synchronously on its own
    internal bus and returns the RunResult as the response."""

    def handle(request):
        if isinstance(request, str):
            request = {"scenario": request}
        spec = parse_scenario(Path(request["scenario"]).read_text(encoding="utf-8"))
        effective = general
        if "seed" in request:
            effective = replace(effective, seed=int(request["seed"]))
        return run_scenario(
            spec,
            effective,
            record_dir=request.get("record_dir"),
            run_id=request.get("run_id", "service"),
        )

    bus.provide(SCENARIO_EXECUTE_SERVICE, handle)
