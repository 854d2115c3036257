from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oival.seqcore import (
    Arith, Complement, DescriptorExhausted, FiniteSet, IndistinguishableUpToHorizon,
    IntervalUnion, Listed, ParseError, XEqualsN, count_in, dist, interval, omit0_check,
    omits, omitted_indices, parse_point, parse_seq, point_spec, quotient, relate, tilde,
)

EVENS = Arith(2, 2)
ODDS = Arith(1, 2)
X_LATE = Listed((1,), Arith(8, 1))  # {1} ∪ {k : k >= 8}


# ---------------------------------------------------------------- evaluation


def test_identity_value():
    assert parse_seq("id").nth(5) == 5


def test_arith_value():
    assert parse_seq("arith(2,2)").nth(3) == 6


def test_complement_of_evens():
    odds = Complement(EVENS, ODDS)
    assert odds.nth(3) == 5
    assert odds.prefix(6) == [1, 3, 5, 7, 9, 11]


def test_complement_rejects_bad_certificate():
    bad = Complement(EVENS, Arith(4, 4))
    with pytest.raises(DescriptorExhausted):
        bad.nth(1)


def test_finite_list_runs_out():
    with pytest.raises(DescriptorExhausted):
        Listed((1, 2, 3)).nth(4)


def test_parse_is_whitespace_insensitive():
    a = parse_seq(" list( 1 , 5 ; arith( 9 , 3 ) ) ")
    assert a.spec == "list(1,5; arith(9,3))"
    assert a.prefix(4) == [1, 5, 9, 12]


@pytest.mark.parametrize("text", ["arith(0,2)", "arith(2)", "list(3,2; arith(5,1))", "foo(1)", "arith(2,2"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_seq(text)


def test_iunion_spec_values():
    u = parse_seq("iunion(arith(1,2), pow(2))")
    # blocks [2^n, 2^(n+1)) for odd n
    assert u.upto(40) == [2, 3, 8, 9, 10, 11, 12, 13, 14, 15, 32, 33, 34, 35, 36, 37, 38, 39, 40]


# ---------------------------------------------------------------- distance


def test_distance_examples():
    assert dist(FiniteSet((1, 2)), FiniteSet((1, 3))) == Fraction(1, 2)
    assert dist(FiniteSet(()), FiniteSet((4,))) == Fraction(1, 4)


def test_distance_of_equal_points_is_an_error():
    with pytest.raises(IndistinguishableUpToHorizon):
        dist(FiniteSet((1,)), FiniteSet((1,)))


# ---------------------------------------------------------------- tilde


def test_tilde_identity_is_identity():
    y = parse_seq("id")
    assert tilde(y) is y


def test_tilde_doubling():
    assert tilde(parse_seq("arith(2,2)")).prefix(6) == [2, 4, 8, 16, 32, 64]


def test_tilde_translation():
    t = tilde(parse_seq("list(; arith(5,1))"))
    assert t.prefix(4) == [5, 9, 13, 17]
    assert t.nth(1000) == 5 + 4 * 999


def _brute_tilde(y, count):
    k = next(n for n in range(1, 10**6) if y.nth(n) != n)
    out = [y.nth(k)]
    while len(out) < count:
        out.append(y.nth(out[-1]))
    return out


seqs = st.builds(
    lambda head, start, step: Listed(sorted(set(head)), Arith(start, step)),
    st.lists(st.integers(1, 30), max_size=4), st.integers(1, 40), st.integers(1, 5))


@given(seqs)
@settings(max_examples=150, deadline=None)
def test_tilde_matches_direct_iteration(y):
    if y.min_missing() is None:
        assert tilde(y) is y
        return
    t = tilde(y)
    ref = _brute_tilde(y, 12)
    assert t.prefix(12) == ref
    assert all(a < b for a, b in zip(ref, ref[1:]))
    assert all(y.nth(n) <= v for n, v in enumerate(ref, 1))
    # index lookups agree with enumeration
    for v in ref[:6]:
        assert v in t and t.next_geq(v) == (ref.index(v) + 1, v)


# ---------------------------------------------------------------- intervals


def test_interval_examples():
    assert len(interval(parse_seq("id"), 2, "open")) == 0
    assert list(interval(EVENS, 2, "open").elements()) == [5]
    assert list(interval(EVENS, 1, "closed").elements()) == [2, 3, 4]


def test_omits_examples():
    from oival.seqcore import Interval
    I = Interval(4, 6, False, False)
    assert not omits(ODDS, I)
    assert omits(EVENS, I)
    assert omits(FiniteSet(()), I)


def test_omitted_indices_examples():
    assert omitted_indices(ODDS, EVENS, "open", 10) == []
    assert omitted_indices(EVENS, EVENS, "open", 4) == [1, 2, 3, 4]
    assert omitted_indices(X_LATE, tilde(EVENS), "open", 2) == [1, 2]


@given(seqs, seqs, st.sampled_from(["open", "closed", "closed_open", "open_closed"]))
@settings(max_examples=100, deadline=None)
def test_omitted_indices_match_sets(x, a, kind):
    horizon = 15
    xs = set(x.upto(a.nth(horizon + 1) + 1))
    got = omitted_indices(x, a, kind, horizon)
    want = [n for n in range(1, horizon + 1)
            if not xs & set(interval(a, n, kind).elements())]
    assert got == want


def test_count_in():
    assert count_in(EVENS, 3, 9) == 3
    assert count_in(FiniteSet((1, 5, 9)), 2, 9) == 2


# ---------------------------------------------------------------- quotient


def test_quotient_examples():
    assert quotient(EVENS, EVENS, 10) == list(range(1, 11))
    assert quotient(parse_seq("arith(100,100)"), parse_seq("id"), 10) == []
    assert quotient(ODDS, EVENS, 5) == [1, 2, 3, 4, 5]


# ---------------------------------------------------------------- omit0


def test_omit0_example():
    v = omit0_check(X_LATE, EVENS, 2)
    assert v.holds
    assert X_LATE.prefix(4) == [1, 8, 9, 10]
    assert EVENS.nth(4) == 8 <= X_LATE.nth(4) == 10


def test_omit0_vacuous_for_odds():
    v = omit0_check(ODDS, EVENS, 10)
    assert v.holds and list(v.witnesses) == []


def test_omit0_rejects_everything():
    with pytest.raises(XEqualsN):
        omit0_check(parse_seq("id"), EVENS, 5)


# ---------------------------------------------------------------- relations


def test_le_identity_evens():
    v = relate("le", parse_seq("id"), EVENS, 100)
    assert v.holds and list(v.witnesses) == list(range(1, 101))


def test_sqe_two_point():
    assert relate("sqe", Arith(4, 4), Arith(16, 16), 50).holds


def test_subs_evens_odds_fails():
    v = relate("subs", EVENS, ODDS, 100)
    assert v.fails
    assert set(range(2, 101, 2)) <= set(v.detail["elements"])


def test_le_star_clean_tail():
    v = relate("le_star", parse_seq("list(50; arith(51,1))"), EVENS, 100)
    assert v.holds
    assert v.detail["crossing"] <= 50


def test_verdict_witness_validation():
    from oival.seqcore import Verdict
    with pytest.raises(ValueError):
        Verdict("holds", 5, (3, 9))


# ---------------------------------------------------------------- points


def test_parse_point_forms():
    assert parse_point([3, 1, 2]) == FiniteSet((1, 2, 3))
    assert point_spec(parse_point("arith(2,2)")) == "arith(2,2)"


@given(seqs, st.integers(1, 200))
@settings(max_examples=150, deadline=None)
def test_next_geq_consistent_with_nth(a, v):
    i, w = a.next_geq(v)
    assert a.nth(i) == w and w >= v
    assert i == 1 or a.nth(i - 1) < v


@given(st.lists(st.booleans(), min_size=1, max_size=8), seqs)
@settings(max_examples=100, deadline=None)
def test_interval_union_matches_blocks(mask, base):
    index = Listed([n for n, keep in enumerate(mask, 1) if keep] or [1], Arith(len(mask) + 1, 2))
    u = IntervalUnion(index, base)
    top = base.nth(len(mask) + 4)
    want = sorted(v for n in index.upto(len(mask) + 3) for v in range(base.nth(n), base.nth(n + 1))
                  if v <= top)
    assert u.upto(top) == want
    assert [u.nth(i) for i in range(1, len(want) + 1)] == want
