"""Figure rendering for recorded runs and campaign reports.

All figures go straight to files through the Agg backend, so rendering
works in headless environments.  Figure rendering is an optional
convenience layer: nothing in the run pipeline depends on it.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be fixed first)

TRAJECTORIES_FIGURE = "trajectories.png"
SPEEDS_FIGURE = "speeds.png"
SCANS_FIGURE = "scans.png"


def _scenario_doc(recording) -> dict | None:
    config_path = Path(recording.root) / "config.json"
    try:
        doc = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return None
    config = doc.get("config", {})
    scenario = config.get("scenario")
    return scenario if isinstance(scenario, dict) else None


def _topics_of_kind(recording, kind: str) -> list[str]:
    return [t.topic for t in recording.manifest.topics if t.payload_kind == kind]


def _entity_tracks(recording, topic: str) -> dict[str, dict[str, list[float]]]:
    """Per-entity time series pulled from a world-snapshot topic."""
    tracks: dict[str, dict[str, list[float]]] = {}
    for t, _seq, snap in recording.iter_topic(topic):
        for ent in snap.entities:
            track = tracks.setdefault(ent.id, {"t": [], "x": [], "y": [], "speed": []})
            track["t"].append(t)
            track["x"].append(ent.x)
            track["y"].append(ent.y)
            track["speed"].append(ent.speed)
    return tracks


def _render_trajectories(recording, topic: str, out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 6))
    scenario = _scenario_doc(recording)
    if scenario:
        for path in scenario.get("map", {}).get("paths", []):
            pts = path.get("points", [])
            if len(pts) >= 2:
                ax.plot(
                    [p[0] for p in pts], [p[1] for p in pts],
                    color="0.7", linewidth=1.0, linestyle="--", zorder=1,
                )
    for entity_id, track in sorted(_entity_tracks(recording, topic).items()):
        ax.plot(track["x"], track["y"], linewidth=1.5, label=entity_id, zorder=2)
        if track["x"]:
            ax.plot(track["x"][0], track["y"][0], marker="o", markersize=4,
                    color=ax.lines[-1].get_color(), zorder=3)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("entity trajectories")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _render_speeds(recording, topic: str, out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    for entity_id, track in sorted(_entity_tracks(recording, topic).items()):
        ax.plot(track["t"], track["speed"], linewidth=1.5, label=entity_id)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("speed [m/s]")
    ax.set_title("entity speeds")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _render_scans(recording, topics: list[str], out_path: Path) -> None:
    """Hit points of the final scan on each range topic, in world frame."""
    import math

    fig, ax = plt.subplots(figsize=(8, 6))
    plotted = False
    for topic in topics:
        last = None
        for _t, _seq, scan in recording.iter_topic(topic):
            last = scan
        if last is None:
            continue
        xs, ys = [], []
        for angle, rng in zip(last.angles, last.ranges):
            if rng >= last.max_range:
                continue
            world = last.origin.heading + angle
            xs.append(last.origin.x + rng * math.cos(world))
            ys.append(last.origin.y + rng * math.sin(world))
        if xs:
            ax.scatter(xs, ys, s=6, label=topic)
            plotted = True
        ax.plot(last.origin.x, last.origin.y, marker="^", markersize=8, color="k")
    if not plotted:
        plt.close(fig)
        return
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("final scan hit points")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_run_figures(recording, out_dir) -> list[Path]:
    """Render the standard figures for one recorded run.

    Returns the paths actually written; topics that were not recorded
    simply skip their figure.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    snapshot_topics = _topics_of_kind(recording, "objects")
    if snapshot_topics:
        topic = snapshot_topics[0]
        traj = out_dir / TRAJECTORIES_FIGURE
        _render_trajectories(recording, topic, traj)
        written.append(traj)
        speeds = out_dir / SPEEDS_FIGURE
        _render_speeds(recording, topic, speeds)
        written.append(speeds)

    scan_topics = _topics_of_kind(recording, "scan")
    if scan_topics:
        scans = out_dir / SCANS_FIGURE
        _render_scans(recording, scan_topics, scans)
        if scans.exists():
            written.append(scans)
    return written


def render_campaign_summary(report: dict, out_path) -> Path:
    """Bar chart of run outcomes for a campaign report dictionary."""
    out_path = Path(out_path)
    runs = report.get("runs", [])
    outcomes = []
    for run in runs:
        if run.get("end_reason") == "error":
            outcomes.append("error")
        elif run.get("passed") is False:
            outcomes.append("fail")
        elif run.get("passed") is True:
            outcomes.append("pass")
        else:
            outcomes.append("done")
    colors = {"pass": "#2a9d48", "fail": "#d03020", "error": "#707070", "done": "#4070c0"}

    fig, (ax_bars, ax_tot) = plt.subplots(
        1, 2, figsize=(max(6, 0.35 * len(runs) + 3), 4),
        gridspec_kw={"width_ratios": [3, 1]},
    )
    ax_bars.bar(
        range(len(runs)), [1] * len(runs),
        color=[colors[o] for o in outcomes], edgecolor="white",
    )
    ax_bars.set_xticks(range(len(runs)))
    ax_bars.set_xticklabels([r.get("run_id", "?") for r in runs],
                            rotation=90, fontsize="x-small")
    ax_bars.set_yticks([])
    ax_bars.set_title("run outcomes")

    counts = [(label, outcomes.count(label)) for label in ("pass", "done", "fail", "error")]
    counts = [(label, n) for label, n in counts if n]
    ax_tot.bar([c[0] for c in counts], [c[1] for c in counts],
               color=[colors[c[0]] for c in counts])
    ax_tot.set_title("totals")
    fig.suptitle(
        f"campaign: {report.get('completed', 0)}/{report.get('total', 0)} completed, "
        f"wall {report.get('wall_time_s', 0.0)} s"
    )
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
