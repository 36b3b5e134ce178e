"""Smoke test for the datagarden extension. Run after `maturin develop`:

    python crates/py/python/smoke_test.py
"""

import json
import pathlib
import sys

import datagarden as dg

SAMPLE = pathlib.Path(__file__).resolve().parents[3] / "data" / "sample"


def read(name):
    return (SAMPLE / name).read_text()


def main():
    schema_text, mapping_text, data_text = read("schema.dg"), read("mapping.dg"), read("responses.csv")

    schema = dg.Schema.parse(schema_text)
    mapping = dg.Mapping.parse(mapping_text)
    assert schema.kind("mbti") == "categorical"
    assert mapping.channels[0] == "archetype"
    assert dg.Mapping.parse(mapping.to_text()) == mapping
    assert mapping.validate(schema) == []
    assert dg.validate(schema_text, mapping_text, data_text) == []

    records = dg.parse_responses(data_text, schema)
    entities = dg.encode(schema, mapping, data_text)
    assert len(records) == len(entities) == 32
    for rec, ent in zip(records, entities):
        role = rec["answers"]["role"]
        assert ent["archetype"] == {"student": "flower", "faculty": "tree"}[role]
        usage = rec["answers"].get("plastic_usage")
        clouds = 0 if usage is None else sum(usage >= t for t in (2, 4, 6))
        assert ent["satellites"] == {"cloud": clouds}

    hues = {e["color"][0] for e in entities}
    assert len(hues) == 16
    assert dg.palette_color("b", ["a", "b"]) == (180.0, 70.0, 50.0)

    scene = dg.Scene.build(schema_text, mapping_text, data_text, seed=42)
    text = scene.to_json()
    again = dg.Scene.parse(text)
    assert again == scene and again.to_json() == text
    assert json.loads(text)["version"] == dg.SCENE_VERSION
    assert json.loads(scene.legend_json()) == json.loads(text)["legend"]

    grouped = dg.grouped_layout(scene, "mbti")
    assert set(grouped) == set(scene.ids)
    plan = dg.plan_transition(scene.positions(), grouped)
    first = scene.ids[0]
    assert plan.position_at(first, 0.0) == scene.positions()[first]
    assert plan.position_at(first, plan.total_time) == grouped[first]

    organic = dg.organic_layout([f"e{i}" for i in range(200)], 40, 40, 1.0, seed=7)
    assert organic == dg.organic_layout([f"e{i}" for i in range(200)], 40, 40, 1.0, seed=7)

    try:
        dg.grouped_layout(scene, "age")
    except dg.DataGardenError as e:
        assert isinstance(e, ValueError)
    else:
        raise AssertionError("numeric grouping accepted")

    print(f"ok: {len(scene)} entities, {len(hues)} hues, transition {plan.total_time:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
