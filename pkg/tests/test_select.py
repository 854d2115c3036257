import pytest
from hypothesis import given, settings, strategies as st

from oival import pipeline
from oival.construct import ScalePrefix, disjointify
from oival.covers import ClopenSet, classify, om_cover
from oival.seqcore import Arith, FiniteSet
from oival.select import (
    PrefixTooShort, Sample, Selection, ab_parts_ok, bs_bound_ok, bs_select, cover_sequence,
    crown_run, gamma_select_small, jordan_diagonal, menger_two_pass, sinf_thin, tower_select,
    uid_select, utgg_select, verify,
)

EVENS = Arith(2, 2)
ODDS = Arith(1, 2)


def fixture_inputs(sample_name, covers_name):
    sample = pipeline.sample_from_plan(pipeline.load_fixture(sample_name))
    covers = pipeline.covers_from_obj(pipeline.load_fixture(covers_name))
    return sample, covers


def fin_sample(*sets):
    return Sample([FiniteSet(tuple(s)) for s in sets], ScalePrefix("le_star"))


# ---------------------------------------------------------------- two passes


def test_two_pass_finite_sample_one_pass():
    sample = fin_sample((1, 2), (3,), ())
    sel = menger_two_pass([om_cover()] * 3, sample)
    assert sel.trace["passes"][1] == []
    assert pipeline.cover_report(sel, [om_cover()] * 3, sample.points)["ok"]


def test_two_pass_infinite_points_need_second_pass():
    sample = Sample([FiniteSet((1,))], ScalePrefix("le_star", [EVENS, ODDS]))
    covers = [om_cover()] * 3
    sel = menger_two_pass(covers, sample)
    assert sel.trace["passes"][1]
    assert pipeline.cover_report(sel, covers, sample.points)["ok"]


def test_two_pass_empty_sample():
    sel = menger_two_pass([om_cover()], fin_sample())
    assert sel.groups == [()]


# ---------------------------------------------------------------- small-part selection


def test_gamma_select_small_everything_contains():
    cands = [[ClopenSet.universal(0)] * 4] * 3
    assert gamma_select_small(cands, [FiniteSet((1,))]) == [1, 1, 1]


def test_gamma_select_small_pointwise_max():
    x1, x2 = FiniteSet((1,)), FiniteSet((2,))
    A1, A2, U = ClopenSet.avoid(1), ClopenSet.avoid(2), ClopenSet.universal(0)
    c1 = [A1, U, A2, U]          # x1: from 2 (positions 2,3,4); x2: from 4
    c2 = [U, A2, U, U]           # x1: 1; x2: 3
    assert gamma_select_small([c1, c2], [x1]) == [2, 1]
    assert gamma_select_small([c1, c2], [x2]) == [4, 3]
    assert gamma_select_small([c1, c2], [x1, x2]) == [4, 3]


def test_gamma_select_small_prefix_too_short():
    with pytest.raises(PrefixTooShort):
        gamma_select_small([[ClopenSet.avoid(1)]], [FiniteSet((1,))])


@given(st.lists(st.lists(st.integers(1, 10), max_size=3), min_size=1, max_size=4))
@settings(max_examples=50, deadline=None)
def test_gamma_select_small_is_gamma(sets):
    points = [FiniteSet(tuple(sorted(set(s)))) for s in sets]
    cands = [om_cover().prefix(14) for _ in range(3)]
    g = gamma_select_small(cands, points)
    for n, p in enumerate(g):
        assert all(cands[n][q].contains(x) for q in range(p - 1, 14) for x in points)


# ---------------------------------------------------------------- demos on fixtures


def run(proc):
    for d in pipeline.load_fixture("demos.json")["demos"]:
        if d["procedure"] == proc:
            return pipeline.run_demo(proc, pipeline.load_fixture(d["sample"]),
                                     pipeline.load_fixture(d["covers"]), d["rounds"], d["horizon"])
    raise KeyError(proc)


@pytest.mark.parametrize("proc", pipeline.GAMMA_PROCEDURES)
def test_demo_is_gamma_certified(proc):
    out = run(proc)
    assert out["verdict"] == "gamma-certified"
    assert out["report"]["max_late_misses"] <= 2


def test_two_pass_demo_covers():
    assert run("two-pass")["verdict"] == "cover-certified"


def test_bs_cardinality():
    sample, covers = fixture_inputs("scale8.json", "om4.json")
    sel = bs_select(covers, sample, 12)
    assert bs_bound_ok(sel)
    I = set(sel.support)
    assert all(not g for n, g in enumerate(sel.groups, 1) if n not in I)
    assert verify(sel, cover_sequence(covers, 12), sample.points)["ok"]


def test_uid_cardinality():
    sample, covers = fixture_inputs("scale8.json", "runs4.json")
    sel = uid_select(covers, sample, 12)
    assert all(len(set(g)) <= n + 1 for n, g in enumerate(sel.groups, 1))
    assert verify(sel, cover_sequence(covers, 12), sample.points)["ok"]


def test_uid_without_tail_reduces_to_one_member():
    sample = fin_sample((1,), (2, 5))
    sel = uid_select([om_cover()], sample, 4)
    assert all(len(g) == 1 for g in sel.groups)
    assert sel.flags


def test_utgg_pairs():
    sample, covers = fixture_inputs("sqe8.json", "runs4.json")
    sel = utgg_select(covers, sample, 12)
    assert all(len(g) == 2 for g in sel.groups)
    assert verify(sel, cover_sequence(covers, 12), sample.points)["ok"]


def test_utgg_small_only_duplicates_and_flags():
    sel = utgg_select([om_cover()], fin_sample((1, 2)), 3)
    assert all(len(g) == 2 and g[0] == g[1] for g in sel.groups)
    assert sel.flags


def test_tower_selection_and_inheritance():
    sample, covers = fixture_inputs("tower8.json", "runs4.json")
    sel = tower_select(covers, sample, 12)
    assert all(len(g) == 1 for g in sel.groups)
    assert all(sel.trace["inheritance"].values())
    assert verify(sel, cover_sequence(covers, 12), sample.points)["ok"]


# ---------------------------------------------------------------- thinning and diagonals


def test_sinf_thin_single_cover():
    fam = om_cover().prefix(12)
    pts = [FiniteSet((1, 3)), FiniteSet((2,))]
    out = sinf_thin([fam], pts)
    assert out["classes"][0] == [list(range(1, 13, 2)), list(range(2, 13, 2))]
    kept = out["kept"][0]
    assert sorted(v % 2 for v in kept) == [0, 1]
    for cls in out["classes"][0]:
        assert classify([fam[p - 1] for p in cls], pts)["is_point_cofinite"].holds


def test_sinf_thin_two_covers():
    fams = [om_cover().prefix(10), om_cover().prefix(10)]
    out = sinf_thin(fams, [FiniteSet((4,))])
    assert [len(k) for k in out["kept"]] == [2, 2]


def test_jordan_single_stage():
    fam = om_cover().prefix(8)
    sel = jordan_diagonal([[FiniteSet((1, 2))]], [fam])
    assert sel.groups == [(3,)]


def test_jordan_three_nested_stages():
    chain = [[FiniteSet((1,))], [FiniteSet((1,)), FiniteSet((2, 5))],
             [FiniteSet((1,)), FiniteSet((2, 5)), FiniteSet((7,))]]
    fams = [om_cover().prefix(16) for _ in range(3)]
    sel = jordan_diagonal(chain, fams)
    picks = [g[0] for g in sel.groups]
    assert len(set(picks)) == 3
    for k, X in enumerate(chain):
        for n in range(k, 3):
            assert all(fams[n][picks[n] - 1].contains(x) for x in X)


def test_jordan_empty():
    assert jordan_diagonal([], []).groups == []


def test_crown_on_fixture_and_ab_parts():
    sample, covers = fixture_inputs("tower12.json", "om3.json")
    sel = crown_run(sample, covers, 8)
    assert all(len(g) == 1 for g in sel.groups)
    assert verify(sel, cover_sequence(covers, 8), sample.points)["ok"]
    for part in ab_parts_ok(sel, sample, covers, 8):
        assert part["small_misses"] == 0 and part["tail_misses"] == {}


def test_crown_no_covers():
    sample, _ = fixture_inputs("tower12.json", "om3.json")
    assert crown_run(sample, []).groups == []


def test_disjointness_across_stage_families():
    fams = [[1, 2, 3, 4], [2, 3, 4, 5], [3, 4, 5, 6]]
    out = disjointify(fams, 1)
    flat = [v for b in out for v in b]
    assert len(flat) == len(set(flat))


# ---------------------------------------------------------------- verifier


def test_verifier_counts_misses_independently():
    covers = [om_cover()] * 4
    sel = Selection("one", [(1,), (2,), (3,), (4,)])
    rep = verify(sel, covers, [FiniteSet((1, 2, 3))], budget=2)
    assert rep["points"][0]["misses"] == [1, 2, 3]
    assert not rep["ok"]
    assert verify(sel, covers, [FiniteSet((1, 2, 3))], budget=3)["ok"]


def test_selection_kind_validation():
    with pytest.raises(ValueError):
        Selection("many", [])
    assert not Selection("pair", [(1,)]).cardinality_ok()
