"""Topic recording and replay: JSONL capture per topic, a run manifest with
verified message counts, and CSV export.

Data files contain no wall-clock time, so identical runs produce identical
bytes; the manifest's ``created`` field is the only wall-clock value in a
run directory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .bus import MessageBus, topic_matches, validate_pattern
from .errors import (
    ExportError,
    RecordingIntegrityError,
    RecordingLoadError,
    StorageError,
)
from .payloads import decode_payload, encode_payload, payload_kind

MANIFEST_NAME = "manifest.json"


def topic_filename(topic: str) -> str:
    return topic.replace("/", "__") + ".jsonl"


@dataclass(frozen=True)
class TopicInfo:
    topic: str
    payload_kind: str
    message_count: int


@dataclass
class RecordingManifest:
    run_id: str
    scenario_name: str
    config_hash: str
    seed: int
    dt: float
    end_reason: str
    created: str
    topics: list[TopicInfo] = field(default_factory=list)
    corrupt: bool = False

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "scenario_name": self.scenario_name,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "dt": self.dt,
            "end_reason": self.end_reason,
            "created": self.created,
            "corrupt": self.corrupt,
            "topics": [
                {
                    "topic": t.topic,
                    "payload_kind": t.payload_kind,
                    "message_count": t.message_count,
                }
                for t in self.topics
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RecordingManifest":
        return cls(
            run_id=obj["run_id"],
            scenario_name=obj["scenario_name"],
            config_hash=obj["config_hash"],
            seed=obj["seed"],
            dt=obj["dt"],
            end_reason=obj["end_reason"],
            created=obj["created"],
            corrupt=obj.get("corrupt", False),
            topics=[TopicInfo(**t) for t in obj["topics"]],
        )


class CaptureHandle:
    """Writes every matching message to one JSONL file per topic.

    Files are created lazily on the first message of a topic; a topic that
    never publishes leaves no file.
    """

    def __init__(self, bus: MessageBus, patterns, out_dir):
        self.patterns = tuple(validate_pattern(p) for p in patterns)
        self.root = Path(out_dir)
        self.topics_dir = self.root / "topics"
        try:
            self.topics_dir.mkdir(parents=True, exist_ok=True)
            probe = self.topics_dir / ".probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise StorageError(f"cannot write recording directory {self.root}: {exc}") from exc
        self._files = {}
        self._counts: dict[str, int] = {}
        self._kinds: dict[str, str] = {}
        self._finalized = False
        bus.add_tap(self._on_message)

    def _on_message(self, msg) -> None:
        if self._finalized:
            return
        if not any(topic_matches(p, msg.topic) for p in self.patterns):
            return
        f = self._files.get(msg.topic)
        if f is None:
            path = self.topics_dir / topic_filename(msg.topic)
            f = path.open("w", encoding="utf-8", newline="\n")
            self._files[msg.topic] = f
            self._counts[msg.topic] = 0
            self._kinds[msg.topic] = payload_kind(msg.payload)
        record = {"t": msg.sim_time, "seq": msg.seq, "payload": encode_payload(msg.payload)}
        f.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        self._counts[msg.topic] += 1

    def flush(self) -> None:
        for f in self._files.values():
            f.flush()

    def finalize(
        self,
        run_id: str,
        scenario_name: str,
        config_hash: str,
        seed: int,
        dt: float,
        end_reason: str,
    ) -> RecordingManifest:
        """Close files, verify on-disk line counts, and write the manifest.

        A count mismatch marks the recording corrupt in the manifest and
        raises RecordingIntegrityError.
        """
        self._finalized = True
        for f in self._files.values():
            f.close()
        mismatches = []
        for topic, expected in self._counts.items():
            path = self.topics_dir / topic_filename(topic)
            actual = sum(1 for _ in path.open("r", encoding="utf-8"))
            if actual != expected:
                mismatches.append(f"{topic}: wrote {expected}, file has {actual}")
        manifest = RecordingManifest(
            run_id=run_id,
            scenario_name=scenario_name,
            config_hash=config_hash,
            seed=seed,
            dt=dt,
            end_reason=end_reason,
            created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            corrupt=bool(mismatches),
            topics=[
                TopicInfo(topic, self._kinds[topic], self._counts[topic])
                for topic in sorted(self._counts)
            ],
        )
        (self.root / MANIFEST_NAME).write_text(
            json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        if mismatches:
            raise RecordingIntegrityError("; ".join(mismatches))
        return manifest


def start_capture(bus: MessageBus, patterns, out_dir) -> CaptureHandle:
    return CaptureHandle(bus, patterns, out_dir)


class Recording:
    """Read access to a finalized run directory."""

    def __init__(self, root):
        self.root = Path(root)
        manifest_path = self.root / MANIFEST_NAME
        if not manifest_path.is_file():
            raise RecordingLoadError(f"no {MANIFEST_NAME} in {self.root}")
        try:
            self.manifest = RecordingManifest.from_dict(
                json.loads(manifest_path.read_text(encoding="utf-8"))
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise RecordingLoadError(f"unreadable manifest in {self.root}: {exc}") from exc
        self._kinds = {t.topic: t.payload_kind for t in self.manifest.topics}

    def topics(self) -> list[str]:
        return [t.topic for t in self.manifest.topics]

    def iter_topic(self, topic: str):
        """Yield (sim_time, seq, payload) with payloads decoded to their kinds."""
        kind = self._kinds.get(topic)
        if kind is None:
            raise RecordingLoadError(f"topic {topic!r} not in recording {self.root}")
        path = self.root / "topics" / topic_filename(topic)
        if not path.is_file():
            raise RecordingLoadError(f"missing data file for topic {topic!r}")
        with path.open("r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                try:
                    record = json.loads(line)
                    yield record["t"], record["seq"], decode_payload(kind, record["payload"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise RecordingLoadError(f"{path} line {lineno}: {exc}") from exc

    def read_topic(self, topic: str) -> list[tuple[float, int, object]]:
        return list(self.iter_topic(topic))


def load_recording(run_dir) -> Recording:
    return Recording(run_dir)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


_CSV_HEADERS = {
    "clock": ["t", "seq", "tick"],
    "objects": ["t", "seq", "id", "path", "station", "speed", "x", "y", "heading", "length", "width"],
    "object_list": ["t", "seq", "id", "x", "y", "heading", "speed", "length", "width"],
    "scan": ["t", "seq", "beam", "angle", "range"],
    "collisions": ["t", "seq", "entity_a", "entity_b"],
    "detections": ["t", "seq", "x", "y", "extent", "support"],
    "status": ["t", "seq", "scenario", "state", "end_reason", "tick"],
}


def _csv_rows(kind: str, t: float, seq: int, payload):
    if kind == "clock":
        yield [t, seq, payload.tick]
    elif kind == "objects":
        for e in payload.entities:
            yield [t, seq, e.id, e.path, e.station, e.speed, e.x, e.y, e.heading, e.length, e.width]
    elif kind == "object_list":
        for o in payload.objects:
            yield [t, seq, o.id, o.pose.x, o.pose.y, o.pose.heading, o.speed, o.length, o.width]
    elif kind == "scan":
        for i, (angle, rng) in enumerate(zip(payload.angles, payload.ranges)):
            yield [t, seq, i, angle, rng]
    elif kind == "collisions":
        for a, b in payload.pairs:
            yield [t, seq, a, b]
    elif kind == "detections":
        for o in payload.objects:
            yield [t, seq, o.center[0], o.center[1], o.extent, o.support]
    elif kind == "status":
        yield [t, seq, payload.scenario, payload.state, payload.end_reason, payload.tick]


def export_csv(recording: Recording, topic: str, out_path=None) -> Path:
    """Flatten one topic to CSV; numbers carry 9 significant digits."""
    kind = recording._kinds.get(topic)
    if kind is None:
        raise ExportError(f"topic {topic!r} not in recording {recording.root}")
    if kind not in _CSV_HEADERS:
        raise ExportError(f"no tabular projection for payload kind {kind!r}")
    if out_path is None:
        out_dir = recording.root / "export"
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / (topic.replace("/", "__") + ".csv")
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_CSV_HEADERS[kind])
        for t, seq, payload in recording.iter_topic(topic):
            for row in _csv_rows(kind, t, seq, payload):
                writer.writerow([_fmt(v) for v in row])
    return out_path
