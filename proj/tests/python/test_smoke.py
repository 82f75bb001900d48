import json
import os
from pathlib import Path

import pytest

import stargen

DATA = Path(os.environ.get("STARGEN_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
TEST_DATA = Path(os.environ.get("STARGEN_TEST_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))
MANIFEST = DATA / "bridgev2-star.stargen.json"
FIXTURES = DATA / "fixtures"


def test_manifest_is_canonical_and_valid():
    text = MANIFEST.read_text(encoding="utf-8")
    assert stargen.canonical_manifest(MANIFEST) == text
    assert stargen.validate_manifest(MANIFEST) == []
    assert len(stargen.manifest_hash(text)) == 64


def test_coverage_and_registry():
    cov = stargen.coverage(MANIFEST)
    assert cov["summary"] == "axes: 13/22, categories: 5/7"
    assert cov["categories"] == ["V", "S", "VB", "SB", "VSB"]
    reg = stargen.registry_selfcheck()
    assert reg["total"] == 22 and reg["categories"] == 7


def test_categorize_and_errors():
    cond = json.loads(MANIFEST.read_text(encoding="utf-8"))["conditions"][0]
    cond["delta"] = {"instruction": "put the orange object on plate", "factor": "referencing color"}
    assert stargen.categorize(MANIFEST, cond) == "S"
    cond["delta"]["instruction"] = "put carrot on plate"
    with pytest.raises(stargen.StargenError) as err:
        stargen.categorize(MANIFEST, cond)
    assert err.value.args[0] == "NoOpInstruction"


def test_validation_reports_diagnostics():
    doc = json.loads(MANIFEST.read_text(encoding="utf-8"))
    doc["conditions"][0]["axis"] = "V-SC"
    diags = stargen.validate_manifest(doc)
    assert [d["code"] for d in diags] == ["CategoryMismatch"]


def test_replay_and_report():
    state = stargen.replay(FIXTURES / "main_results.stargen.log")
    assert len(state["cells"]) > 0
    csv = stargen.report(FIXTURES / "main_results.stargen.log", MANIFEST, "csv", "axis")
    assert "minivla-bridge-ft,axis:V-OBJ,12,15,80.0%\r\n" in csv
    chart = stargen.report(FIXTURES / "compositional.stargen.log", MANIFEST, "chart", "composition")
    overall = [r for r in chart["records"] if r["model"] == "openvla-oxe-ft" and r["group"] == "overall"]
    assert (overall[0]["successes"], overall[0]["total"]) == (20, 30)


def test_propose_with_mock():
    drafts = stargen.propose(MANIFEST, "carrot_base", "VSB-NOBJ", DATA / "mock_vlm")
    assert len(drafts) == 3
    assert all(d["axis"] == "VSB-NOBJ" for d in drafts)
    with pytest.raises(stargen.StargenError) as err:
        stargen.propose(MANIFEST, "carrot_base", "S-PROP", TEST_DATA / "mock_malformed")
    assert err.value.args[0] == "SchemaError"
