"""Run-level settings shared by the runner, the CLI, and campaigns, plus the
canonical JSON form used for hashing configurations."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

DEFAULT_DT = 0.05
OUTPUT_DIR_ENV = "CARLOS_LITE_OUT"

# Post-run services that may be requested per campaign.
KNOWN_SERVICES = ("csv_export", "plot")


@dataclass(frozen=True)
class GeneralSettings:
    """Settings applying to every run of a campaign (or to one ad-hoc run)."""

    scenario: str | None = None
    duration_s: float | None = None
    dt: float = DEFAULT_DT
    seed: int = 0
    record_topics: tuple[str, ...] = ()
    output_dir: str | None = None
    max_parallel: int = 1
    services: tuple[str, ...] = ()


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "out"))


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, no whitespace, repr floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
