"""Validates shipped catalog data and fixtures against schemas/ (pytest)."""

import json
import pathlib

import jsonschema
import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"
WALL = ROOT / "fixtures" / "wall"


def schema(name):
    return json.loads((ROOT / "schemas" / f"{name}.schema.json").read_text())


CASES = (
    [("taxonomy", p) for p in sorted((DATA / "taxonomies").glob("*.json"))]
    + [("ruleset", p) for p in sorted((DATA / "rulesets").glob("*.json"))]
    + [("mapping", p) for p in sorted((WALL / "mappings").glob("*.json"))]
    + [("pipeline", WALL / "pipeline.json")]
)


@pytest.mark.parametrize("kind,path", CASES, ids=[p.name for _, p in CASES])
def test_file_matches_schema(kind, path):
    jsonschema.validate(json.loads(path.read_text()), schema(kind))


def test_schema_rejects_unknown_approach():
    config = json.loads((WALL / "pipeline.json").read_text())
    config["approach"] = "squash"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(config, schema("pipeline"))
