"""Deterministic scenario-based 2D traffic simulation framework.

Layers: a fixed-timestep simulation core with path-following entities and
simple sensors, an in-process publish/subscribe bus, JSONL topic recording
with CSV export, scenario documents with triggered events and pass/fail
criteria, campaign orchestration over parameter permutations, and a CLI.
"""

from .bus import Message, MessageBus, topic_matches
from .campaign import (
    CampaignReport,
    RunConfig,
    build_run_configs,
    execute_campaign,
    expand_permutations,
    parse_campaign,
    run_campaign_file,
)
from .config import GeneralSettings, canonical_json, config_hash, default_output_dir
from .detector import DetectedObject, DetectedObjects, attach_detector, cluster_scan
from .errors import (
    ActionError,
    ConfigError,
    EvaluationError,
    ExportError,
    RecordingIntegrityError,
    RecordingLoadError,
    ScenarioParseError,
    SensorError,
    ServiceCallError,
    ServiceError,
    ServiceUnavailableError,
    SimError,
    StationRangeError,
    StorageError,
    TopicError,
    ValidationError,
)
from .evaluation import (
    CriterionSpec,
    MetricSpec,
    Trace,
    Verdict,
    compute_metric,
    evaluate_criteria,
    match_detections,
)
from .recorder import (
    Recording,
    RecordingManifest,
    export_csv,
    load_recording,
    start_capture,
)
from .runner import RunResult, install_scenario_service, run_scenario
from .scenario import (
    ScenarioSpec,
    parse_scenario,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
)
from .simcore import (
    CollisionEvent,
    ObjectList,
    RangeScan,
    SensorConfig,
    StepConfig,
    detect_collisions,
    init_world,
    sample_object_sensor,
    sample_range_scan,
    step,
)
from .world import (
    EntityDecl,
    EntityState,
    PathModel,
    Pose2D,
    WorldState,
    footprint_corners,
    normalize_angle,
    station_to_pose,
)

__version__ = "0.1.0"

__all__ = [
    "ActionError",
    "CampaignReport",
    "CollisionEvent",
    "ConfigError",
    "CriterionSpec",
    "DetectedObject",
    "DetectedObjects",
    "EntityDecl",
    "EntityState",
    "EvaluationError",
    "ExportError",
    "GeneralSettings",
    "Message",
    "MessageBus",
    "MetricSpec",
    "ObjectList",
    "PathModel",
    "Pose2D",
    "RangeScan",
    "Recording",
    "RecordingIntegrityError",
    "RecordingLoadError",
    "RecordingManifest",
    "RunConfig",
    "RunResult",
    "ScenarioParseError",
    "ScenarioSpec",
    "SensorConfig",
    "SensorError",
    "ServiceCallError",
    "ServiceError",
    "ServiceUnavailableError",
    "SimError",
    "StationRangeError",
    "StepConfig",
    "StorageError",
    "TopicError",
    "Trace",
    "ValidationError",
    "Verdict",
    "WorldState",
    "attach_detector",
    "build_run_configs",
    "canonical_json",
    "cluster_scan",
    "compute_metric",
    "config_hash",
    "default_output_dir",
    "detect_collisions",
    "evaluate_criteria",
    "execute_campaign",
    "expand_permutations",
    "export_csv",
    "footprint_corners",
    "init_world",
    "install_scenario_service",
    "load_recording",
    "match_detections",
    "normalize_angle",
    "parse_campaign",
    "parse_scenario",
    "run_campaign_file",
    "run_scenario",
    "sample_object_sensor",
    "sample_range_scan",
    "scenario_from_dict",
    "scenario_to_dict",
    "serialize_scenario",
    "start_capture",
    "station_to_pose",
    "step",
    "topic_matches",
    "__version__",
]
