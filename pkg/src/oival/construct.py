"""Diagonal constructions run stage by stage against finite oracle families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .seqcore import (
    Arith, Complement, Formula, Identity, IncSeq, IntervalUnion, Lazy, OivalError,
    ParseError, Quotient, count_in, omits, Interval, register_form, relate, tilde,
    _int, _seq,
)

ODDS = Arith(1, 2)
EVENS = Arith(2, 2)
MEET_SCAN = 10**5


class EmptyTransform(OivalError):
    pass


class CenteredCheckFailed(OivalError):
    pass


# ---------------------------------------------------------------- sequence forms


class Compose(Formula):
    """n -> outer(inner(n))."""

    def __init__(self, outer: IncSeq, inner: IncSeq):
        self.outer = outer
        self.inner = inner

    def nth(self, n):
        return self.outer.nth(self.inner.nth(n))

    @property
    def spec(self):
        return f"comp({self.outer.spec}, {self.inner.spec})"


class PointwiseMax(Formula):
    """n -> max of the members at n, plus a constant."""

    def __init__(self, members: Sequence[IncSeq], plus: int = 0):
        if not members:
            raise ValueError("max needs at least one member")
        self.members = tuple(members)
        self.plus = plus

    def nth(self, n):
        return max(m.nth(n) for m in self.members) + self.plus

    @property
    def spec(self):
        body = ", ".join(m.spec for m in self.members)
        return f"max({body}; plus={self.plus})" if self.plus else f"max({body})"


class Sparse(Lazy):
    """Starts at 1; each next element is the least v making every closed
    interval [previous, v] hold two points of each member."""

    def __init__(self, members: Sequence[IncSeq]):
        super().__init__()
        self.members = tuple(members)

    @property
    def spec(self):
        return "sparse(" + ", ".join(m.spec for m in self.members) + ")"

    def _generate(self):
        v = 1
        while True:
            yield v
            nxt = v + 1
            for p in self.members:
                i, _ = p.next_geq(v)
                nxt = max(nxt, p.nth(i + 1))
            v = nxt


class Above(Lazy):
    """Subset of `base` chosen so that its n-th element is >= f(n)."""

    def __init__(self, base: IncSeq, f: IncSeq):
        super().__init__()
        self.base = base
        self.f = f

    @property
    def spec(self):
        return f"above({self.base.spec}, {self.f.spec})"

    def _generate(self):
        prev, n = 0, 1
        while True:
            _, prev = self.base.next_geq(max(self.f.nth(n), prev + 1))
            yield prev
            n += 1


class Meet(Lazy):
    """Intersection of finitely many sequences."""

    def __init__(self, members: Sequence[IncSeq]):
        super().__init__()
        if not members:
            raise ValueError("meet needs members")
        self.members = tuple(members)

    @property
    def spec(self):
        return "meet(" + ", ".join(m.spec for m in self.members) + ")"

    def _generate(self):
        first, rest = self.members[0], self.members[1:]
        i = 1
        misses = 0
        while True:
            v = first.nth(i)
            if all(v in m for m in rest):
                misses = 0
                yield v
            else:
                misses += 1
                if misses > MEET_SCAN:
                    raise CenteredCheckFailed(f"{self.spec}: no common element found")
            i += 1

    def __contains__(self, k):
        return all(k in m for m in self.members)


class OmitClosed(Lazy):
    """Round-robin gap insertion: keep one point, then jump over the next full
    closed interval of the current member of the family."""

    def __init__(self, family: Sequence[IncSeq]):
        super().__init__()
        if not family:
            raise ValueError("family must be non-empty")
        self.family = tuple(family)
        # (member position, left endpoint, right endpoint) of each skipped interval
        self.stages: list[tuple[int, int, int]] = []

    @property
    def spec(self):
        return "omitc(" + ", ".join(y.spec for y in self.family) + ")"

    def _generate(self):
        p = 1
        j = 0
        while True:
            yield p
            y = self.family[j]
            lo = y.least_geq(p + 1)
            hi = y.least_geq(lo + 1)
            self.stages.append((j, lo, hi))
            p = hi + 1
            j = (j + 1) % len(self.family)

    def schedule(self, member: int, rounds: int) -> list[tuple[int, int]]:
        """Endpoints of the first `rounds` omitted closed intervals of family[member]."""
        while sum(1 for j, _, _ in self.stages if j == member) < rounds:
            self._pull()
        return [(lo, hi) for j, lo, hi in self.stages if j == member][:rounds]


class SplitSet(IntervalUnion):
    """Interval union whose complement comes with a certificate."""

    def __init__(self, index: IncSeq, base: IncSeq, cert_index: IncSeq):
        super().__init__(index, base)
        self.complement = Complement(self, IntervalUnion(cert_index, base))


@register_form("comp")
def _b_comp(c):
    o, i = c.sections[0]
    return Compose(_seq(o), _seq(i))


@register_form("max")
def _b_max(c):
    plus = c.keywords.get("plus", 0)
    if not isinstance(plus, int) or plus < 0:
        raise ParseError("plus must be a natural number")
    return PointwiseMax([_seq(m) for m in c.sections[0]], plus)


@register_form("sparse")
def _b_sparse(c):
    return Sparse([_seq(m) for m in c.sections[0]])


@register_form("above")
def _b_above(c):
    b, f = c.sections[0]
    return Above(_seq(b), _seq(f))


@register_form("meet")
def _b_meet(c):
    return Meet([_seq(m) for m in c.sections[0]])


@register_form("omitc")
def _b_omitc(c):
    return OmitClosed([_seq(m) for m in c.sections[0]])


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class OracleFamily:
    members: tuple
    role: str = "dominating-oracle"

    def __post_init__(self):
        if not self.members:
            raise ValueError("oracle family must be non-empty")
        specs = [m.spec for m in self.members]
        if len(set(specs)) != len(specs):
            raise ValueError("oracle family has duplicates")
        if self.role not in ("dominating-oracle", "unbounded-oracle"):
            raise ValueError(self.role)


SCALE_KINDS = ("le_star", "sqe", "tower", "unbounded")


@dataclass
class ScalePrefix:
    kind: str
    members: list = field(default_factory=list)
    # certificates gathered while building (per member)
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in SCALE_KINDS:
            raise ValueError(f"unknown scale kind {self.kind!r}")

    def __len__(self):
        return len(self.members)

    def certify(self, horizon: int) -> list[dict]:
        """Pairwise relation verdicts demanded by the kind."""
        rel = {"le_star": "le_star", "sqe": "sqe", "tower": "subs"}.get(self.kind)
        out = []
        if rel is None:
            return out
        for j in range(len(self.members)):
            for i in range(j):
                if rel == "subs":
                    v = relate("subs", self.members[j], self.members[i], horizon)
                else:
                    v = relate(rel, self.members[i], self.members[j], horizon)
                out.append({"i": i + 1, "j": j + 1, "relation": rel,
                            "outcome": v.outcome, "crossing": v.detail.get("crossing")})
        return out


# ---------------------------------------------------------------- operations


@dataclass
class Split:
    a: IncSeq
    a_compl: IncSeq
    g: IncSeq

    def witnesses(self, horizon: int) -> dict:
        """Indices n <= horizon with g(n) <= a(n), and with g(n) <= a^c(n)."""
        return {
            "a": list(relate("le_inf", self.g, self.a, horizon).witnesses),
            "a_compl": list(relate("le_inf", self.g, self.a_compl, horizon).witnesses),
        }

    def schedule(self, count: int) -> dict:
        """Witness indices read off the construction: a skips the open
        intervals after tilde g(2n), the complement those after tilde g(2n-1)."""
        tg = tilde(self.g)
        sa = [tg.nth(2 * n) for n in range(1, count + 1)]
        sc = [tg.nth(2 * n - 1) for n in range(1, count + 1)]
        return {"a": sa, "a_compl": sc}


def split_by_g(g: IncSeq) -> Split:
    tg = tilde(g)
    a = SplitSet(ODDS, tg, EVENS)
    return Split(a, a.complement, g)


def omit_closed_family(Y: Sequence[IncSeq], rounds: int) -> OmitClosed:
    s = OmitClosed(Y)
    for j in range(len(Y)):
        s.schedule(j, rounds)
    return s


@dataclass
class Dominator:
    b: OmitClosed
    c: IncSeq
    family: tuple
    base: IncSeq

    def schedule(self, member: int, rounds: int) -> list[int]:
        """omit0 witness indices tilde y(j) for the member, one per omitted
        closed quotient interval of b."""
        y = self.family[member]
        ty = tilde(y)
        out = []
        for _, hi in self.b.schedule(member, rounds):
            # last tilde-y point inside block q(i): its successor lies in block q(i+1)
            j = ty.count_below(self.base.nth(hi))
            out.append(ty.nth(j))
        return out

    def witnesses(self, horizon: int) -> dict:
        return {y.spec: list(relate("le_inf", y, self.c, horizon).witnesses)
                for y in self.family}


def interval_union_dominator(Y: Sequence[IncSeq], a: IncSeq, rounds: int) -> Dominator:
    quotients = [Quotient(tilde(y), a) for y in Y]
    b = omit_closed_family(quotients, rounds)
    c = IntervalUnion(b, a)
    return Dominator(b, c, tuple(Y), a)


def split_step(Y: Sequence[IncSeq], a: IncSeq, rounds: int) -> SplitSet:
    """s with Y <=inf s and a <=inf s^c; s.complement carries the certificate."""
    ta = tilde(a)
    dom = interval_union_dominator(Y, ta, rounds)
    s = SplitSet(Compose(dom.b, ODDS), ta, Compose(dom.b, EVENS))
    s.dominator = dom
    return s


def scale_step(kind: str, prior: ScalePrefix, f: IncSeq) -> IncSeq:
    if prior.kind != kind:
        raise ValueError(f"prior is a {prior.kind} prefix, not {kind}")
    if kind == "le_star":
        # prior members form a pointwise chain, so the last one bounds them all
        base = [prior.members[-1]] if prior.members else []
        return PointwiseMax(base + [f], plus=1)
    if kind == "sqe":
        if not prior.members:
            return Above(Identity(), f)
        return Above(Sparse([prior.members[-1]]), f)
    raise ValueError(f"scale_step does not build {kind}")


def tower_step(prior: ScalePrefix, f: IncSeq) -> IncSeq:
    if prior.kind != "tower":
        raise ValueError("tower_step needs a tower prefix")
    base = prior.members[-1] if prior.members else Identity()
    return Above(base, f)


def tower_from_scale(scale: ScalePrefix, g: IncSeq, horizon: int) -> dict:
    members = []
    for s in scale.members:
        t = [n for n in range(1, horizon + 1) if s.nth(n) <= g.nth(n)]
        if not t:
            raise EmptyTransform(f"{s.spec} never lies below {g.spec} up to {horizon}")
        members.append(t)
    crossings = {}
    for j in range(len(members)):
        for i in range(j):
            v = relate("le_star", scale.members[i], scale.members[j], horizon)
            cross = v.detail.get("crossing", v.detail.get("last_violation", horizon))
            extra = sorted(set(members[j]) - set(members[i]))
            if extra and extra[-1] > cross:
                raise AssertionError("transform broke almost-inclusion")
            crossings[f"{i + 1},{j + 1}"] = cross
    return {"members": members, "crossings": crossings}


def pseudointersection(family: Sequence[IncSeq], horizon: int) -> list[int]:
    if not family:
        raise ValueError("empty family")
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if not any(v in family[j] for v in family[i].upto(horizon)):
                raise CenteredCheckFailed(
                    f"{family[i].spec} and {family[j].spec} share nothing up to {horizon}")
    out = [v for v in family[0].upto(horizon) if all(v in m for m in family[1:])]
    if not out:
        raise CenteredCheckFailed("intersection prefix is empty")
    return out


def disjointify(families: Sequence[Iterable[int]], take: int) -> list[list[int]]:
    """Round-robin choice of pairwise disjoint subsets B_i of A_i."""
    iters = [iter(f) for f in families]
    used: set = set()
    out: list[list[int]] = [[] for _ in families]
    dead = [False] * len(families)
    k = 0
    while any(len(b) < take and not d for b, d in zip(out, dead)):
        k += 1
        progressed = False
        for i in range(min(k, len(families))):
            if dead[i]:
                continue
            for v in iters[i]:
                if v not in used:
                    used.add(v)
                    out[i].append(v)
                    progressed = True
                    break
            else:
                dead[i] = True
        if not progressed and k >= len(families):
            break
    return out


def build_prefix(kind: str, oracle: Sequence[IncSeq], k: int, horizon: int = 1000,
                 rounds: int = 3, base: Sequence[IncSeq] = ()) -> ScalePrefix:
    """Run k stages; stage i uses oracle member i (cycled)."""
    prefix = ScalePrefix(kind)
    if kind == "tower" and base:
        pseudointersection(list(base), horizon)
        prefix.members.append(Above(Meet(list(base)), oracle[0]))
        prefix.witnesses.append({"stage": 1, "base": [b.spec for b in base]})
    while len(prefix.members) < k:
        i = len(prefix.members)
        f = oracle[i % len(oracle)]
        if kind in ("le_star", "sqe"):
            s = scale_step(kind, prefix, f)
            prefix.witnesses.append({"stage": i + 1, "oracle": f.spec})
        elif kind == "tower":
            s = tower_step(prefix, f)
            prefix.witnesses.append({"stage": i + 1, "oracle": f.spec})
        else:
            Y = [oracle[j % len(oracle)] for j in range(i + 1)]
            Y = list({y.spec: y for y in Y}.values())
            s = split_step(Y, f, rounds)
            dom = s.dominator
            prefix.witnesses.append({
                "stage": i + 1, "oracle": f.spec,
                "complement": s.complement.spec,
                "schedule": {y.spec: dom.schedule(j, rounds) for j, y in enumerate(Y)},
            })
        prefix.members.append(s)
    return prefix
