"""Shared builders for scenario documents used across the suite."""

import json

import pytest


def straight_path(path_id="lane", length=200.0):
    return {"id": path_id, "points": [[0.0, 0.0], [float(length), 0.0]]}


def entity(entity_id, station=0.0, speed=0.0, target_speed=0.0, path="lane", **extra):
    doc = {
        "id": entity_id,
        "path": path,
        "station": station,
        "speed": speed,
        "target_speed": target_speed,
    }
    doc.update(extra)
    return doc


def scenario_doc(
    name="scenario",
    paths=None,
    entities=None,
    sensors=None,
    events=None,
    stop=None,
    criteria=None,
):
    doc = {
        "name": name,
        "map": {"paths": paths if paths is not None else [straight_path()]},
        "entities": entities if entities is not None else [entity("ego")],
        "stop": stop if stop is not None else {"timeout_s": 1.0},
    }
    if sensors is not None:
        doc["sensors"] = sensors
    if events is not None:
        doc["events"] = events
    if criteria is not None:
        doc["criteria"] = criteria
    return doc


def write_json(directory, filename, doc):
    path = directory / filename
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def make_scenario_file(tmp_path):
    def _make(doc, filename="scenario.json"):
        return write_json(tmp_path, filename, doc)

    return _make
