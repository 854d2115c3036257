"""One line per acceptance criterion: number, verdict, measured time and limit."""

import time
from pathlib import Path

import pytest

from oival import pipeline
from oival.suites import run_suite

GOLDEN = Path(__file__).parent / "golden"

SUITE_CRITERIA = [
    (1, "tilde"), (2, "omit0"), (3, "splitter"), (4, "dominator"), (5, "gm"),
    (6, "selectors"), (7, "hitting"), (8, "defeaters"), (9, "reclaw"),
]


def report(capsys, number, name, ok, elapsed, limit, detail=""):
    line = (f"criterion {number:2d} {name:10s} {'PASS' if ok else 'FAIL'} "
            f"{elapsed:6.2f}s / {limit:.0f}s {detail}").rstrip()
    with capsys.disabled():
        print("\n" + line)


def _detail(rep):
    keys = ("cases", "horizon", "min_witnesses", "largest_needed_index")
    return " ".join(f"{k}={rep[k]}" for k in keys if k in rep)


@pytest.mark.parametrize("number,suite", SUITE_CRITERIA, ids=[s for _, s in SUITE_CRITERIA])
def test_criterion(capsys, number, suite):
    res = run_suite(suite)
    rep = res["report"]
    ok = rep["passed"] and res["elapsed"] < res["time_limit"]
    report(capsys, number, suite, ok, res["elapsed"], res["time_limit"], _detail(rep))
    assert rep["passed"], rep["counterexamples"][:5]
    assert res["elapsed"] < res["time_limit"]


def test_criterion_10_cli_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    runs = []
    for attempt in ("first", "second"):
        out = tmp_path / attempt
        out.mkdir()
        for proc in pipeline.PROCEDURES:
            d = next(x for x in pipeline.load_fixture("demos.json")["demos"] if x["procedure"] == proc)
            trace = pipeline.run_demo(proc, pipeline.load_fixture(d["sample"]),
                                      pipeline.load_fixture(d["covers"]), d["rounds"], d["horizon"])
            pipeline.write_json(trace, out / f"{proc}.json")
        runs.append(out)
    elapsed = time.perf_counter() - t0
    names = [f"{p}.json" for p in pipeline.PROCEDURES]
    identical = all((runs[0] / n).read_bytes() == (runs[1] / n).read_bytes() for n in names)
    golden = all((runs[0] / n).read_bytes() == (GOLDEN / n).read_bytes() for n in names)
    ok = identical and golden and elapsed < 30
    report(capsys, 10, "cli", ok, elapsed, 30,
           f"demos={len(names)} identical={identical} golden={golden}")
    assert identical and golden
    assert elapsed < 30
