import json

import pytest

from coarsedyn.coarse_space import CoarseSpaceError, validate
from coarsedyn.dynamics import Conjugacy, validate_cds
from coarsedyn.scenario import ScenarioError, load_scenario, parse_scenario
from conftest import FIXTURES


def test_fixture_loads():
    sc = load_scenario(FIXTURES / "rotation.scn")
    assert set(sc.spaces) == {"C4", "C4b", "pair", "broken"}
    assert set(sc.maps) == {"reflect", "collapse"}
    assert validate_cds(sc.systems["rot"]) and validate_cds(sc.systems["rot2"])
    assert isinstance(sc.conjugacies["mirror"], Conjugacy)
    assert sc.conjugacy_refs["mirror"] == ("rot", "rot2")
    assert len(sc.space("W16").ground) == 33


def test_raw_chain_kept_unvalidated():
    sc = load_scenario(FIXTURES / "rotation.scn")
    with pytest.raises(CoarseSpaceError):
        validate(sc.space("broken"))
    with pytest.raises(ScenarioError, match="not a coarse space"):
        sc.valid_space("broken")


def test_minimal_discrete_space():
    sc = parse_scenario(json.dumps({"spaces": {"D": {"points": [1, 2, 3], "discrete": True}}}))
    assert sc.seed == 0
    assert len(sc.space("D").chain) == 1


def test_normalize_flag():
    doc = {"spaces": {"S": {"points": ["u", "v"], "chain": [[["u", "v"]]], "normalize": True}}}
    validate(parse_scenario(json.dumps(doc)).space("S"))


def test_dangling_reference():
    doc = {
        "spaces": {"D": {"points": ["a"], "discrete": True}},
        "maps": {"m": {"from": "D", "to": "nowhere", "assign": [["a", "a"]]}},
    }
    with pytest.raises(ScenarioError, match="dangling reference"):
        parse_scenario(json.dumps(doc))


def test_unknown_label_and_missing_key():
    doc = {
        "spaces": {"D": {"points": ["a"], "discrete": True}},
        "maps": {"m": {"from": "D", "to": "D", "assign": [["a", "zz"]]}},
    }
    with pytest.raises(ScenarioError, match="unknown label"):
        parse_scenario(json.dumps(doc))
    with pytest.raises(ScenarioError, match="missing key"):
        parse_scenario(json.dumps({"windows": {"W": {"kind": "integer"}}}))


def test_parse_error_reports_position():
    text = '{\n  "spaces": {\n    "D": {"points": [1,]}\n  }\n}'
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text, "bad.scn")
    assert str(info.value).startswith("bad.scn:3:")


def test_duplicate_keys_and_unknown_sections():
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenario('{"spaces": {"A": {"points": [1], "discrete": true}, "A": {"points": [2], "discrete": true}}}')
    with pytest.raises(ScenarioError, match="unknown top-level"):
        parse_scenario('{"spacez": {}}')


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.scn")


def test_failed_conjugacy_is_kept_as_verdict():
    doc = json.loads((FIXTURES / "rotation.scn").read_text())
    # the identity on points with the flipped time map does not intertwine
    doc["conjugacies"]["mirror"]["f"] = [["a", "w"], ["b", "x"], ["c", "y"], ["d", "z"]]
    sc = parse_scenario(json.dumps(doc))
    v = sc.conjugacies["mirror"]
    assert not isinstance(v, Conjugacy) and not v


def test_numbers_read_exactly():
    doc = {
        "spaces": {"T": {"points": ["a", "b"], "metric": {"matrix": [[0, "inf"], ["inf", 0]], "scales": ["5/2"]}}},
        "windows": {"W": {"kind": "grid", "halfWidth": 2, "step": "1/4", "scales": [1, 2]}},
    }
    sc = parse_scenario(json.dumps(doc))
    assert len(sc.space("W").ground) == 17
    assert sc.space("T").top.rows == (0b01, 0b10)
    with pytest.raises(ScenarioError, match="not a number"):
        parse_scenario(json.dumps({"windows": {"W": {"kind": "grid", "halfWidth": "two"}}}))
