import json

import pytest

from coarsedyn import cli
from conftest import FIXTURES

SCN = str(FIXTURES / "rotation.scn")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def checks(text):
    doc = json.loads(text)
    assert set(doc) == {"version", "seed", "checks"}
    return doc["checks"]


def test_check_space_pass_and_fail(capsys):
    code, out, _ = run(capsys, "check-space", "--scenario", SCN, "--space", "C4")
    assert code == 0 and checks(out)[0]["verdict"] == "PASS"
    code, out, _ = run(capsys, "check-space", "--scenario", SCN, "--space", "broken")
    rec = checks(out)[0]
    assert code == 1 and rec["verdict"] == "FAIL"
    assert rec["witness"]["invariant"] == "diagonal" and rec["witness"]["pair"] == ["v", "v"]


def test_check_map_text_format(capsys):
    code, out, _ = run(capsys, "check-map", "--scenario", SCN, "--format", "text")
    assert code == 1
    assert out.splitlines() == ["FAIL  check-map  collapse", "PASS  check-map  reflect", "1/2 checks passed"]


@pytest.mark.parametrize(
    "argv",
    [
        ("check-group",),
        ("check-cds",),
        ("conjugacy",),
        ("orbit",),
        ("coproduct",),
        ("hyperlift",),
        ("asdim", "--space", "W16", "--n", "1"),
        ("check-map", "--map", "reflect"),
    ],
)
def test_commands_pass_on_fixture(capsys, argv):
    code, out, _ = run(capsys, argv[0], "--scenario", SCN, *argv[1:])
    recs = checks(out)
    assert recs and all(r["verdict"] == "PASS" for r in recs)
    assert code == 0
    assert [(r["check"], r["input"]) for r in recs] == sorted((r["check"], r["input"]) for r in recs)


def test_zr_demo_without_scenario(capsys):
    code, out, _ = run(capsys, "zr-demo", "--half-width", "20")
    assert code == 0 and checks(out)[0]["verdict"] == "PASS"


def test_corpus_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["corpus", "--seed", "7", "--count", "5", "--report", str(a)]) == 0
    assert cli.main(["corpus", "--seed", "7", "--count", "5", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 7 and len(doc["checks"]) == 5 and "seconds" not in doc


def test_timings_flag(capsys):
    code, out, _ = run(capsys, "zr-demo", "--half-width", "4", "--timings")
    assert code == 0 and "seconds" in json.loads(out)


def test_usage_errors(capsys, tmp_path):
    code, _, err = run(capsys, "check-space", "--scenario", str(tmp_path / "missing.scn"))
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "check-map", "--scenario", SCN, "--map", "nope")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["check-space"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["corpus", "--hyper-cap", "13"])


def test_plain_conversion():
    from fractions import Fraction

    assert cli.plain({1: Fraction(1, 2), "x": frozenset({2, 1}), "y": float("inf")}) == {
        "1": "1/2",
        "x": [1, 2],
        "y": "inf",
    }
