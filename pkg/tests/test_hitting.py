import random

import pytest
from hypothesis import given, settings, strategies as st

from oival.covers import ClopenSet, classify
from oival.hitting import (
    BlockCover, BlockSelector, MOutOfBlock, NoDefeaterInSample, basic_open, build_refined,
    default_partition, defeat_gamma_selection, greedy_selection, guard_check, hitting_count,
    kun_check, kun_embed, perturb, perturbation_guard, sparse_embed, verify_refined, window_counts,
)
from oival.seqcore import Arith, FiniteSet, Identity, parse_seq, relate

LINEAR = default_partition("linear")
DOUBLING = default_partition("doubling")
EVENS = Arith(2, 2)
ODDS = Arith(1, 2)


# ---------------------------------------------------------------- partitions


def test_linear_blocks():
    assert [list(LINEAR.block(n)) for n in (1, 2, 3)] == [[1], [2, 3], [4, 5, 6]]
    assert [LINEAR.start(n) for n in range(1, 6)] == [1, 2, 4, 7, 11]


def test_doubling_blocks():
    assert [list(DOUBLING.block(n)) for n in (1, 2, 3)] == [[1], [2, 3], [4, 5, 6, 7]]


@pytest.mark.parametrize("part", [LINEAR, DOUBLING])
def test_blocks_tile(part):
    seen = [v for n in range(1, 12) for v in part.block(n)]
    assert seen == list(range(1, len(seen) + 1))
    assert all(part.block_of(v) == n for n in range(1, 12) for v in part.block(n))


def test_unknown_partition():
    with pytest.raises(ValueError):
        default_partition("cubic")


# ---------------------------------------------------------------- basic opens


def test_basic_open_examples():
    assert basic_open(LINEAR, 2, 3) == ClopenSet.avoid(3)
    with pytest.raises(MOutOfBlock):
        basic_open(LINEAR, 2, 5)


def test_block_covers_point_cofinite_on_finite_sets():
    sample = [FiniteSet((1, 2)), FiniteSet((5,)), FiniteSet(())]
    for n in range(4, 9):
        cover = BlockCover(LINEAR, n)
        assert all(any(U.contains(x) for U in cover.prefix(n)) for x in sample)
    # in all but finitely many blocks every member holds the sample
    members = [BlockCover(LINEAR, n).member(1) for n in range(1, 12)]
    assert classify(members, sample)["is_point_cofinite"].holds


# ---------------------------------------------------------------- hitting counts


def test_hitting_count_full_union():
    g = BlockSelector(LINEAR, "id")
    assert hitting_count(perturb(Identity(), g), g, 15) == 15


def test_hitting_count_evens():
    g = BlockSelector(LINEAR, 1)
    # minima 1, 2, 4, 7, 11, 16, ...: even exactly at n = 2, 3, 6, 7, 10, 11, ...
    want = sum(1 for n in range(1, 21) if LINEAR.start(n) % 2 == 0)
    assert hitting_count(EVENS, g, 20) == want


def test_hitting_count_empty():
    assert hitting_count(FiniteSet(()), BlockSelector(DOUBLING, 2), 10) == 0


def test_selector_validation():
    with pytest.raises(MOutOfBlock):
        BlockSelector(LINEAR, 1, explicit={2: (4,)})
    with pytest.raises(ValueError):
        BlockSelector(LINEAR, "const 0")
    g = BlockSelector(LINEAR, 2, rule="last", explicit={3: (4, 6)})
    assert g(3) == (4, 6) and g(4) == (9, 10) and g(1) == (1,)


# ---------------------------------------------------------------- embeddings


@pytest.mark.parametrize("k,part,seq", [
    (1, DOUBLING, Identity()), (2, LINEAR, EVENS), (3, LINEAR, parse_seq("arith(5,7)")),
])
def test_kun_embed(k, part, seq):
    g = BlockSelector(part, k)
    t, sp = kun_embed(k, g, seq)
    chk = kun_check(k, seq, t, sp, 200)
    assert chk["pointwise"].holds and chk["counting_failures"] == []
    chosen = {m for n in t.prefix(40) for m in g(n)}
    assert set(sp.prefix(40)) <= chosen


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sparse_embed_windows(k):
    s = Arith(10, 10)
    g = BlockSelector(LINEAR, k)
    t, sp = sparse_embed(s, k, g)
    assert max(window_counts(s, sp, 300)) <= k
    assert len(t.prefix(25)) == 25


def test_embedding_needs_matching_width():
    with pytest.raises(ValueError):
        kun_embed(2, BlockSelector(LINEAR, 1), Identity())
    with pytest.raises(ValueError):
        sparse_embed(Identity(), 1, BlockSelector(LINEAR, "id"))


# ---------------------------------------------------------------- perturbation guard


def test_guard_arithmetic_example():
    g = BlockSelector(LINEAR, 1)
    c = perturbation_guard(g, Identity(), 4)
    # d(n) = c(n) and c(n+1) is the end of the (c(n)+1)-th open identity interval past c(n)
    assert c == [1, 3, 7, 15]
    assert all(b > 2 * a for a, b in zip(c, c[1:]))


def test_guard_known_prefix():
    g = BlockSelector(LINEAR, 1)
    assert perturbation_guard(g, EVENS, 4) == [1, 6, 20, 62]


@pytest.mark.parametrize("width", ["id", 1, 2])
def test_guard_random_points(width):
    g = BlockSelector(LINEAR, width)
    a = EVENS
    c = perturbation_guard(g, a, 4)
    assert all(x < y for x, y in zip(c, c[1:]))
    rng = random.Random(7)
    top = c[-1]
    for _ in range(200):
        omit = {n for n in range(1, len(c)) if rng.random() < 0.5}
        s = FiniteSet(tuple(v for v in range(1, top + 1)
                            if not any(c[n - 1] < v < c[n] for n in omit) and rng.random() < 0.3))
        assert guard_check(g, a, c, s, 200) == []


# ---------------------------------------------------------------- perturb


def test_perturb_examples():
    g = BlockSelector(LINEAR, "id")
    assert perturb(Identity(), g).prefix(10) == list(range(1, 11))
    pe, po = perturb(EVENS, g), perturb(ODDS, g)
    assert not set(pe.upto(200)) & set(po.upto(200))
    for n in range(1, 15):
        inside = [v for v in pe.upto(LINEAR.start(n + 1)) if v in LINEAR.block(n)]
        assert len(inside) == (n if n % 2 == 0 else 0)


@given(st.lists(st.frozensets(st.integers(1, 9), max_size=5), min_size=2, max_size=6, unique=True))
@settings(max_examples=60, deadline=None)
def test_perturb_injective(sets):
    g = BlockSelector(DOUBLING, 2, rule="last")
    images = {perturb(FiniteSet(tuple(sorted(s))), g).elements for s in sets}
    assert len(images) == len(sets)


# ---------------------------------------------------------------- defeaters


def test_defeat_with_self_perturbation():
    sel = greedy_selection(LINEAR, [FiniteSet((1, 2))], 40)
    g = BlockSelector(LINEAR, 1, explicit={n: (m,) for n, m in enumerate(sel, 1)})
    x = perturb(Identity(), g)
    rep = defeat_gamma_selection(LINEAR, [FiniteSet((3,)), x], sel)
    assert rep["point"] == 1 and rep["confirmed"]
    assert rep["failures"] == list(range(1, 41))


def test_defeat_groups():
    sel = greedy_selection(LINEAR, [], 30, width=2, highest=True)
    g = BlockSelector(LINEAR, 2, rule="last")
    rep = defeat_gamma_selection(LINEAR, [perturb(Identity(), g)], sel)
    assert len(rep["failures"]) == 30


def test_defeat_needs_a_hitting_point():
    with pytest.raises(NoDefeaterInSample):
        defeat_gamma_selection(LINEAR, [FiniteSet(())], [])
    with pytest.raises(NoDefeaterInSample):
        defeat_gamma_selection(LINEAR, [FiniteSet((1,))], greedy_selection(LINEAR, [], 30))


# ---------------------------------------------------------------- refined plans


ORACLE = [parse_seq(s) for s in ("arith(3,3)", "list(2,9; arith(20,4))")]


@pytest.mark.parametrize("plan", ["u2nots1", "uidnotuk", "uk+1notuk", "ufognonuidgg"])
def test_refined_plans_verify(plan):
    ref = build_refined(plan, ORACLE, 4, 200)
    assert verify_refined(ref, 150)["ok"]


def test_u2nots1_refinement_keeps_sqe():
    ref = build_refined("u2nots1", ORACLE, 4, 200)
    for s, sp in zip(ref.base.members, ref.members):
        assert relate("sqe", s, sp, 150).holds
