import json
from pathlib import Path

import pytest

from oival import pipeline
from oival.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- rel


@pytest.mark.parametrize("rel,a,b,outcome", [
    ("le", "id", "arith(2,2)", "holds"),
    ("subs", "arith(2,2)", "arith(1,2)", "fails"),
    ("sqe", "arith(4,4)", "arith(16,16)", "holds"),
    ("le_star", "list(50; arith(51,1))", "arith(2,2)", "holds"),
])
def test_rel(capsys, rel, a, b, outcome):
    code, out, _ = run_cli(capsys, "rel", rel, a, b)
    assert code == 0
    assert json.loads(out)["outcome"] == outcome


def test_rel_parse_error(capsys):
    code, _, err = run_cli(capsys, "rel", "le", "arith(0,2)", "id")
    assert code == 2 and "ParseError" in err


# ---------------------------------------------------------------- usage errors


def test_unknown_suite(capsys):
    code, _, err = run_cli(capsys, "verify", "--suite", "nope")
    assert code == 2 and "UnknownSuite" in err


def test_argparse_error(capsys):
    assert run_cli(capsys, "demo", "--procedure", "magic")[0] == 2


def test_rounds_above_horizon(capsys):
    code, _, err = run_cli(capsys, "demo", "--procedure", "bs", "--rounds", "9", "--horizon", "5")
    assert code == 2 and "--rounds" in err


def test_all_demos_need_out(capsys):
    assert run_cli(capsys, "demo", "--procedure", "all")[0] == 2


def test_malformed_json_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "le_star",\n "oracle": ["id"], oops}\n')
    code, _, err = run_cli(capsys, "demo", "--procedure", "bs", "--sample", str(bad),
                           "--covers", "om4.json")
    assert code == 2 and "line 2, column" in err


def test_bad_covers_field_named(capsys, tmp_path):
    bad = tmp_path / "covers.json"
    bad.write_text(json.dumps({"covers": [{"generator": "Om", "copies": -1}]}))
    code, _, err = run_cli(capsys, "demo", "--procedure", "bs", "--covers", str(bad))
    assert code == 2 and "covers.json" in err and "copies" in err


# ---------------------------------------------------------------- verify


def test_verify_single_suite(capsys):
    code, _, err = run_cli(capsys, "verify", "--suite", "gm", "--seed", "3")
    assert code == 0 and "pass" in err


# ---------------------------------------------------------------- demos and goldens


def test_crown_demo_certified(capsys):
    code, out, _ = run_cli(capsys, "demo", "--procedure", "crown")
    assert code == 0 and json.loads(out)["verdict"] == "gamma-certified"


@pytest.mark.parametrize("proc", pipeline.PROCEDURES)
def test_demo_matches_golden(capsys, proc):
    code, out, _ = run_cli(capsys, "demo", "--procedure", proc)
    assert code == 0
    assert out == (GOLDEN / f"{proc}.json").read_text(encoding="utf-8")


def test_demo_deterministic_file_output(capsys, tmp_path):
    for name in ("a.json", "b.json"):
        assert run_cli(capsys, "demo", "--procedure", "utgg", "--out", str(tmp_path / name))[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_replay_identical(capsys):
    code, out, _ = run_cli(capsys, "replay", str(GOLDEN / "jordan.json"))
    assert code == 0 and "identical" in out


def test_replay_detects_tampering(capsys, tmp_path):
    trace = json.loads((GOLDEN / "bs.json").read_text())
    trace["inputs"]["rounds"] = 11
    p = tmp_path / "t.json"
    p.write_text(pipeline.dumps(trace))
    assert run_cli(capsys, "replay", str(p))[0] == 1


# ---------------------------------------------------------------- construct


@pytest.mark.parametrize("plan", ["le_star16", "sqe8", "tower8", "unbounded4", "u2nots1", "uidnotuk"])
def test_construct_matches_golden(capsys, plan):
    code, out, _ = run_cli(capsys, "construct", f"plan_{plan}.json")
    assert code == 0
    got = json.loads(out)
    assert got["ok"]
    assert out == (GOLDEN / f"construct_plan_{plan}.json").read_text(encoding="utf-8")


def test_construct_noncentered_tower_fails(capsys):
    code, _, err = run_cli(capsys, "construct", "plan_tower_noncentered.json")
    assert code == 1 and "CenteredCheckFailed" in err


def test_construct_unknown_kind(capsys, tmp_path):
    p = tmp_path / "plan.json"
    p.write_text(json.dumps({"kind": "zigzag", "oracle": ["id"], "steps": 2}))
    code, _, err = run_cli(capsys, "construct", str(p))
    assert code == 2 and "plan.kind" in err
