"""Selection procedures from the covering-property proofs, run on finite samples.

A sample is a list of finite sets followed by an ordered prefix (scale or
tower) split at an index: members before it form the small part together
with the finite sets, the rest is the tail.  Every selector returns a
Selection whose member indices refer to the enumerations of the covers, and
`verify` rechecks it by exact clopen membership, independently of how it
was produced.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .construct import ScalePrefix, disjointify
from .covers import ClopenSet, CoverStream, GMResult, gm_extract
from .seqcore import FiniteSet, IncSeq, OivalError, Point, count_in, point_spec, relate

MISS_BUDGET = 2


class NotCoverable(OivalError):
    pass


class PrefixTooShort(OivalError):
    pass


class EmptyI(OivalError):
    def __init__(self, msg, n=None):
        super().__init__(msg)
        self.n = n


class TowerExhausted(OivalError):
    pass


# ---------------------------------------------------------------- data types


@dataclass
class Sample:
    fin_part: list
    ordered: ScalePrefix
    split: int | None = None

    def __post_init__(self):
        specs = [x.spec for x in self.fin_part]
        if len(set(specs)) != len(specs):
            raise ValueError("finite part has duplicates")
        if self.split is not None and not 0 <= self.split <= len(self.ordered):
            raise ValueError("split index outside the ordered part")

    @property
    def points(self) -> list:
        return list(self.fin_part) + list(self.ordered.members)

    def small(self, split: int) -> list:
        return list(self.fin_part) + list(self.ordered.members[:split])

    def tail(self, split: int) -> list:
        return list(self.ordered.members[split:])

    def labels(self) -> list[str]:
        return [f"fin{i + 1}" for i in range(len(self.fin_part))] + \
               [f"s{j + 1}" for j in range(len(self.ordered))]


KINDS = ("one", "pair", "k-bounded", "n+1-bounded", "finite")


@dataclass
class Selection:
    kind: str
    groups: list                      # per cover n (1-based position n-1): tuple of member indices
    support: list | None = None       # covers that count; None means all
    thresholds: dict = field(default_factory=dict)   # sample position -> last forgiven n
    trace: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown selection kind {self.kind!r}")

    def cardinality_ok(self) -> bool:
        for n, g in enumerate(self.groups, 1):
            size = len(set(g))
            if self.kind == "one" and len(g) != 1:
                return False
            if self.kind == "pair" and len(g) != 2:
                return False
            if self.kind == "n+1-bounded" and size > n + 1:
                return False
        return True

    def to_json(self) -> dict:
        return {"kind": self.kind, "groups": [list(g) for g in self.groups],
                "support": self.support, "trace": self.trace, "flags": self.flags,
                "thresholds": {str(k): v for k, v in sorted(self.thresholds.items())}}


def cover_sequence(covers: Sequence[CoverStream], rounds: int | None = None) -> list[CoverStream]:
    """The n-th cover of the run is covers[(n-1) mod len]."""
    if not covers:
        return []
    rounds = len(covers) if rounds is None else rounds
    return [covers[i % len(covers)] for i in range(rounds)]


class _GMCache:
    def __init__(self):
        self._memo = {}

    def get(self, cover, k, N, allowed=None, points=()) -> GMResult:
        key = (id(cover), k, N, tuple(point_spec(p) for p in points))
        if allowed is not None:
            return gm_extract(cover, k, N, allowed=allowed, points=points)
        hit = self._memo.get(key)
        if hit is None:
            hit = gm_extract(cover, k, N, points=points)
            self._memo[key] = hit
        return hit


# ---------------------------------------------------------------- verifier


def verify(selection: Selection, covers: Sequence[CoverStream], points: Sequence[Point],
           budget: int = MISS_BUDGET) -> dict:
    """Recheck: each point lies in the union of the selected members of cover n
    for every supported n, except for n at or below its threshold and at most
    `budget` further misses."""
    support = selection.support if selection.support is not None \
        else list(range(1, len(selection.groups) + 1))
    unions = {}
    for n in support:
        members = [covers[n - 1].member(m) for m in selection.groups[n - 1]]
        unions[n] = members
    per_point = []
    ok = True
    for i, x in enumerate(points):
        misses = [n for n in support if not any(U.contains(x) for U in unions[n])]
        forgiven = selection.thresholds.get(i, 0)
        late = [n for n in misses if n > forgiven]
        per_point.append({"point": i, "misses": misses, "threshold": forgiven,
                          "late_misses": len(late)})
        if len(late) > budget:
            ok = False
    return {"points": per_point, "budget": budget, "ok": ok,
            "cardinality_ok": selection.cardinality_ok(),
            "max_late_misses": max((p["late_misses"] for p in per_point), default=0)}


# ---------------------------------------------------------------- selectors


def _first_member(cover: CoverStream, x: Point, limit: int, skip=()) -> int | None:
    n = cover.size()
    top = limit if n is None else min(limit, n)
    for m in range(1, top + 1):
        if m not in skip and cover.member(m).contains(x):
            return m
    return None


def menger_two_pass(covers: Sequence[CoverStream], sample: Sample, limit: int = 256) -> Selection:
    """Finitely many members per cover: the finite part first, the rest after."""
    groups: list[list[int]] = [[] for _ in covers]
    if not covers:
        if sample.points:
            raise NotCoverable("no covers")
        return Selection("finite", [], trace={"passes": [[], []]})
    passes = [[], []]
    turn = 0

    def place(i, x, which):
        nonlocal turn
        for shift in range(len(covers)):
            n = (turn + shift) % len(covers)
            m = _first_member(covers[n], x, limit)
            if m is not None:
                if m not in groups[n]:
                    groups[n].append(m)
                passes[which].append(i)
                turn = n + 1
                return
        raise NotCoverable(f"point {point_spec(x)} lies in no member of any cover prefix")

    pts = sample.points
    for i, x in enumerate(sample.fin_part):
        place(i, x, 0)
    for i in range(len(sample.fin_part), len(pts)):
        x = pts[i]
        if any(covers[n].member(m).contains(x) for n, g in enumerate(groups) for m in g):
            continue
        place(i, x, 1)
    return Selection("finite", [tuple(sorted(g)) for g in groups], trace={"passes": passes})


def eventual_position(candidates: Sequence[ClopenSet], x: Point) -> int:
    """Least position p (1-based) with x in every candidate from p on."""
    if not candidates or not candidates[-1].contains(x):
        raise PrefixTooShort(f"{point_spec(x)} is not in the last candidate")
    p = len(candidates)
    while p > 1 and candidates[p - 2].contains(x):
        p -= 1
    return p


def gamma_select_small(candidates: Sequence[Sequence[ClopenSet]], points: Sequence[Point],
                       mode: str = "cofinite") -> list[int]:
    """Per cover a position g(n) in its candidate list: the largest eventual
    position over the points (cofinite), or the one of a point visited round
    robin (cofinal)."""
    if mode not in ("cofinite", "cofinal"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for n, cands in enumerate(candidates, 1):
        if not points:
            if not cands:
                raise PrefixTooShort(f"cover {n} has no candidates")
            out.append(1)
            continue
        f = [eventual_position(cands, x) for x in points]
        out.append(max(f) if mode == "cofinite" else f[(n - 1) % len(f)])
    return out


def _split_for(sample: Sample, qualifies) -> int:
    """Explicit split, or scan from the end for the first member qualifying."""
    if sample.split is not None:
        return sample.split
    for j in range(len(sample.ordered) - 1, -1, -1):
        if qualifies(j):
            return j
    raise EmptyI("no member of the ordered part yields enough witness indices")


def _needed(rounds: int) -> int:
    return max(2, rounds // 3)


def _tail_thresholds(sample: Sample, split: int, rel: str, horizon: int) -> dict:
    """Last forgiven cover index for every tail point, read off its relation
    certificate with the split member."""
    out = {}
    base = len(sample.fin_part)
    pivot = sample.ordered.members[split] if split < len(sample.ordered) else None
    for j in range(split, len(sample.ordered)):
        s = sample.ordered.members[j]
        if j == split:
            continue
        if rel == "subs":
            v = relate("subs", s, pivot, horizon)
            out[base + j] = v.detail.get("crossing", horizon)
        else:
            v = relate(rel, pivot, s, horizon)
            out[base + j] = v.detail.get("crossing", v.detail.get("last_violation", horizon))
    return out


def _bs_core(covers, sample, rounds, horizon, with_points: bool):
    seq = cover_sequence(covers, rounds)
    R = len(seq)
    cache = _GMCache()
    members = sample.ordered.members

    def gm_for(n, split):
        # one run per cover; shorter runs are prefixes of it
        pts = sample.small(split) if with_points else ()
        try:
            return cache.get(seq[n - 1], 0, R + 1, points=pts)
        except OivalError:
            return cache.get(seq[n - 1], 0, R + 1)

    def index_set(split):
        s = members[split]
        return [n for n in range(1, R + 1) if gm_for(n, split).a[n] < s.nth(n)]

    if not members:
        return seq, None, None, gm_for
    split = _split_for(sample, lambda j: len(index_set(j)) >= _needed(R))
    if split >= len(members):
        return seq, split, None, gm_for
    I = index_set(split)
    if not I:
        raise EmptyI("no cover index qualifies")
    return seq, split, I, gm_for


def bs_select(covers: Sequence[CoverStream], sample: Sample, rounds: int | None = None,
              horizon: int = 1000, limit: int = 256) -> Selection:
    """Finitely many members per cover on the index set I of the split member."""
    seq, split, I, gm_for = _bs_core(covers, sample, rounds, horizon, with_points=True)
    R = len(seq)
    if I is None:
        raise EmptyI("the sample has no tail part")
    small = sample.small(split)
    groups = []
    extra_counts = {}
    for n in range(1, R + 1):
        if n not in I:
            groups.append(())
            continue
        gm = gm_for(n, split)
        base = list(gm.members[:n])
        chosen = [seq[n - 1].member(m) for m in base]
        extra = []
        for x in small:
            if any(U.contains(x) for U in chosen):
                continue
            m = _first_member(seq[n - 1], x, limit)
            if m is None:
                raise PrefixTooShort(f"no member of cover {n} holds {point_spec(x)}")
            extra.append(m)
            chosen.append(seq[n - 1].member(m))
        extra_counts[n] = len(extra)
        groups.append(tuple(sorted(set(base + extra))))
    thresholds = _tail_thresholds(sample, split, "le_star", horizon)
    sel = Selection("finite", groups, support=I, thresholds=thresholds,
                    trace={"split": split, "I": I, "extra": extra_counts,
                           "a": {n: gm_for(n, split).a for n in I}})
    return sel


def bs_bound_ok(sel: Selection) -> bool:
    """|F_n| <= n on I and F_n empty off I."""
    I = set(sel.support or [])
    return all((len(set(g)) <= n) if n in I else not g for n, g in enumerate(sel.groups, 1))


def uid_select(covers: Sequence[CoverStream], sample: Sample, rounds: int | None = None,
               horizon: int = 1000, limit: int = 64) -> Selection:
    """Like bs_select, but the small part takes one member per cover chosen
    from its eventual positions."""
    seq, split, I, gm_for = _bs_core(covers, sample, rounds, horizon, with_points=False)
    R = len(seq)
    small = sample.small(split if split is not None else len(sample.ordered))
    cands = [[c.member(m) for m in range(1, _cap(c, limit) + 1)] for c in seq]
    g = gamma_select_small(cands, small)
    if I is None:
        return Selection("n+1-bounded", [(m,) for m in g],
                         trace={"split": split, "I": None, "g": g},
                         flags=["no tail part: one member per cover"])
    groups = []
    for n in range(1, R + 1):
        if n not in I:
            groups.append(())
            continue
        base = list(gm_for(n, split).members[:n])
        groups.append(tuple(sorted(set(base + [g[n - 1]]))))
    thresholds = _tail_thresholds(sample, split, "le_star", horizon)
    return Selection("n+1-bounded", groups, support=I, thresholds=thresholds,
                     trace={"split": split, "I": I, "g": g})


def _cap(cover: CoverStream, limit: int) -> int:
    n = cover.size()
    return limit if n is None else min(limit, n)


@dataclass
class CommonB:
    b: list
    inner: dict      # (n, m) -> index i of the open b_n interval inside (b(m), b(m+1))


def common_b(bs: Sequence[Sequence[int]]) -> CommonB:
    """b with b(1) = 1 where every open interval (b(m), b(m+1)) contains an
    open interval of every given prefix; stops when a prefix runs out."""
    b = [1]
    inner = {}
    while True:
        top = b[-1] + 1
        picks = {}
        for n, bn in enumerate(bs, 1):
            i = next((i for i in range(len(bn) - 1) if bn[i] >= b[-1]), None)
            if i is None:
                return CommonB(b, inner)
            picks[n] = i + 1
            top = max(top, bn[i + 1])
        m = len(b)
        for n, i in picks.items():
            inner[(n, m)] = i
        b.append(top)


def utgg_select(covers: Sequence[CoverStream], sample: Sample, rounds: int | None = None,
                horizon: int = 1000, depth: int | None = None) -> Selection:
    """Pairs W^n_m of consecutive Galvin-Miller members, m in the omission set I."""
    seq = cover_sequence(covers, rounds)
    R = len(seq)
    N = depth or 3 * R + 6
    cache = _GMCache()
    gms = [cache.get(c, 1, N) for c in seq]
    cb = common_b([g.a for g in gms])
    b = cb.b
    L = len(b) - 1  # usable intervals (b(m), b(m+1)), m = 1..L
    c = [n for n in range(1, R + 1)]
    members = sample.ordered.members

    def index_set(split):
        s = members[split]
        return [m for m in range(1, L + 1) if count_in(s, b[m - 1] + 1, b[m] - 1) == 0]

    flags = []
    if not members:
        split = 0
        I = None
    else:
        split = _split_for(sample, lambda j: len([m for m in index_set(j) if m >= R]) >= _needed(R))
        I = index_set(split) if split < len(members) else None
    small = sample.small(split)

    def pair(n, m):
        return gms[n - 1].groups[cb.inner[(n, m)] - 1]

    def union(n, grp):
        U = seq[n - 1].member(grp[0])
        for j in grp[1:]:
            U = U.union(seq[n - 1].member(j))
        return U

    if I is None:
        cands = [[seq[n - 1].member(m) for m in range(1, _cap(seq[n - 1], 64) + 1)]
                 for n in range(1, R + 1)]
        g = gamma_select_small(cands, small)
        flags.append("no tail part: single member duplicated to fill each pair")
        return Selection("pair", [(m, m) for m in g], flags=flags,
                         trace={"split": split, "b": b, "I": None, "g": g})
    windows = []
    for n in range(1, R + 1):
        ms = [m for m in I if m >= c[n - 1]]
        if not ms:
            raise EmptyI(f"no witness index at or above c({n}) = {c[n - 1]}", n)
        windows.append(ms)
    cands = [[union(n, pair(n, m)) for m in windows[n - 1]] for n in range(1, R + 1)]
    pos = gamma_select_small(cands, small)
    gsel = [windows[n - 1][p - 1] for n, p in enumerate(pos, 1)]
    groups = [pair(n, m) for n, m in enumerate(gsel, 1)]
    thresholds = {}
    base = len(sample.fin_part)
    pivot = members[split]
    for j in range(split + 1, len(members)):
        v = relate("sqe", pivot, members[j], horizon)
        k0 = v.detail.get("crossing", v.detail.get("last_violation", horizon))
        # closed intervals of the later member past index k0 hold two pivot points
        k = members[j].nth(k0 + 1) if k0 else 0
        thresholds[base + j] = max((n for n, m in enumerate(gsel, 1) if b[m - 1] < k), default=0)
    return Selection("pair", groups, thresholds=thresholds, flags=flags,
                     trace={"split": split, "b": b, "c": c, "I": I, "g": gsel})


def tower_select(covers: Sequence[CoverStream], sample: Sample, rounds: int | None = None,
                 horizon: int = 1000, depth: int | None = None) -> Selection:
    """One member per cover, from the indices m >= n where the split member
    omits (a_n(m), a_n(m+1))."""
    seq = cover_sequence(covers, rounds)
    R = len(seq)
    N = depth or 2 * R + 8
    cache = _GMCache()
    gms = [cache.get(c, 0, N) for c in seq]
    members = sample.ordered.members

    def index_sets(split):
        t = members[split]
        return [[m for m in range(n, N + 1)
                 if count_in(t, gms[n - 1].a[m - 1] + 1, gms[n - 1].a[m] - 1) == 0]
                for n in range(1, R + 1)]

    split = _split_for(sample, lambda j: all(len(I) >= 1 for I in index_sets(j))) if members else 0
    if split >= len(members):
        raise EmptyI("tower selection needs a split member")
    Is = index_sets(split)
    for n, I in enumerate(Is, 1):
        if not I:
            raise EmptyI(f"I_{n} is empty", n)
    small = sample.small(split)
    cands = [[seq[n - 1].member(gms[n - 1].members[m - 1]) for m in Is[n - 1]]
             for n in range(1, R + 1)]
    pos = gamma_select_small(cands, small)
    g = [Is[n - 1][p - 1] for n, p in enumerate(pos, 1)]
    groups = [(gms[n - 1].members[m - 1],) for n, m in enumerate(g, 1)]
    thresholds = {}
    inheritance = {}
    base = len(sample.fin_part)
    for j in range(split + 1, len(members)):
        # beyond k the later member lies inside the split member
        k = relate("subs", members[j], members[split], horizon).detail.get("crossing", 0)
        late = [(n, m) for n, m in enumerate(g, 1) if gms[n - 1].a[m - 1] >= k]
        thresholds[base + j] = max((n for n, m in enumerate(g, 1) if gms[n - 1].a[m - 1] < k),
                                   default=0)
        inheritance[j + 1] = all(
            count_in(members[j], gms[n - 1].a[m - 1] + 1, gms[n - 1].a[m] - 1) == 0
            for n, m in late)
    return Selection("one", groups, thresholds=thresholds,
                     trace={"split": split, "I_n": Is, "g": g, "inheritance": inheritance})


# ---------------------------------------------------------------- thinning


def _eventual(cands: Sequence[ClopenSet], x: Point) -> int:
    return eventual_position(cands, x)


def sinf_thin(families: Sequence[Sequence[ClopenSet]], points: Sequence[Point],
              classes: int = 2) -> dict:
    """Split each family into index classes mod `classes`, arrange all classes
    in one sequence and pick one member from each so that the picks together
    are point-cofinite on the points.  Returns the kept positions per family."""
    seq = []
    for n, fam in enumerate(families):
        for j in range(classes):
            pos = list(range(j + 1, len(fam) + 1, classes))
            if pos:
                seq.append((n, pos))
    cands = [[families[n][p - 1] for p in pos] for n, pos in seq]
    picks = gamma_select_small(cands, points)
    kept: list[list[int]] = [[] for _ in families]
    for (n, pos), p in zip(seq, picks):
        kept[n].append(pos[p - 1])
    class_sets = [[list(range(j + 1, len(f) + 1, classes)) for j in range(classes)] for f in families]
    return {"classes": class_sets, "kept": [sorted(k) for k in kept]}


def jordan_diagonal(chain: Sequence[Sequence[Point]], families: Sequence[Sequence[ClopenSet]],
                    labels: Sequence[Sequence[int]] | None = None) -> Selection:
    """One member per family; family n is point-cofinite on chain[min(n, k) - 1].

    Families are first made pairwise disjoint, then stage k drops from every
    family n >= k the members before the eventual position of the stage-k
    points, and fixes the first remaining member of family k."""
    R = len(families)
    if R == 0:
        return Selection("one", [])
    labels = labels or [list(range(1, len(f) + 1)) for f in families]
    keys = [[(U.canonical_key(), U.depth) for U in fam] for fam in families]
    # disjoint choice of positions (by set identity) across families
    order = [list(range(len(f))) for f in families]
    ident = [[keys[n][i] for i in order[n]] for n in range(R)]
    chosen_keys = disjointify(ident, max(len(f) for f in families))
    alive = []
    for n in range(R):
        pick = set(chosen_keys[n])
        seen = set()
        pos = []
        for i in order[n]:
            k = keys[n][i]
            if k in pick and k not in seen:
                seen.add(k)
                pos.append(i)
        alive.append(pos)
    picks = []
    stages = []
    for k in range(1, R + 1):
        X = chain[min(k, len(chain)) - 1]
        for n in range(k, R + 1):
            fam = [families[n - 1][i] for i in alive[n - 1]]
            if not fam:
                raise PrefixTooShort(f"family {n} thinned to nothing at stage {k}")
            cut = max((_eventual(fam, x) for x in X), default=1)
            alive[n - 1] = alive[n - 1][cut - 1:]
        i = alive[k - 1][0]
        picks.append(i)
        stages.append({"stage": k, "kept": [len(a) for a in alive[k - 1:]]})
    groups = [(labels[n][i],) for n, i in enumerate(picks)]
    return Selection("one", groups, trace={"stages": stages})


def chain_thresholds(chain: Sequence[Sequence[Point]], points: Sequence[Point]) -> dict:
    """Stage at which each point first appears in the chain, minus one."""
    out = {}
    specs = [{point_spec(x) for x in X} for X in chain]
    for i, x in enumerate(points):
        sp = point_spec(x)
        stage = next((k for k, S in enumerate(specs, 1) if sp in S), None)
        out[i] = (stage - 1) if stage is not None else 0
    return out


def crown_run(sample: Sample, covers: Sequence[CoverStream], rounds: int | None = None,
              horizon: int = 1000, depth: int | None = None) -> Selection:
    """ab-steps along the tower, then the staged diagonal."""
    seq = cover_sequence(covers, rounds)
    R = len(seq)
    if R == 0:
        return Selection("one", [])
    depth = depth or max(24, 12 * R)
    members = sample.ordered.members
    fin = list(sample.fin_part)
    alpha = 0
    steps = []
    families = []
    labels = []
    need = 2
    for n in range(1, R + 1):
        cover = seq[n - 1]
        small = fin + list(members[:alpha])

        def allowed(m, cover=cover, small=small):
            U = cover.member(m)
            return all(U.contains(x) for x in small)

        gm = gm_extract(cover, 0, depth, allowed=allowed)
        beta, I = None, None
        for j in range(alpha + 1, len(members)):
            t = members[j]
            cand = [i for i in range(1, depth + 1) if count_in(t, gm.a[i - 1] + 1, gm.a[i] - 1) == 0]
            if len(cand) >= need:
                beta, I = j, cand
                break
        if beta is None:
            raise TowerExhausted(f"no tower member past position {alpha + 1} gives {need} omitted intervals")
        fam_idx = [gm.members[i - 1] for i in I]
        steps.append({"cover": n, "alpha": alpha, "beta": beta, "a": gm.a, "I": I, "members": fam_idx})
        families.append([cover.member(m) for m in fam_idx])
        labels.append(fam_idx)
        alpha = beta
    final_alpha = alpha
    chain = [fin + list(members[:st["alpha"]]) + list(members[final_alpha:]) for st in steps]
    sel = jordan_diagonal(chain, families, labels)
    thresholds = chain_thresholds(chain, sample.points)
    sel.thresholds = thresholds
    sel.trace.update({"ab_steps": steps, "alpha_final": final_alpha})
    return sel


def ab_parts_ok(sel: Selection, sample: Sample, covers: Sequence[CoverStream],
                rounds: int | None = None) -> list[dict]:
    """For every ab-step: the family is point-cofinite on the small part and on
    the tail from the deeper member, checked separately."""
    from .covers import classify
    seq = cover_sequence(covers, rounds)
    out = []
    for st in sel.trace.get("ab_steps", []):
        fam = [seq[st["cover"] - 1].member(m) for m in st["members"]]
        small = sample.small(st["alpha"])
        deep = list(sample.ordered.members[st["beta"]:])
        rs = classify(fam, small, 0, size_bound=1)["point_misses"]
        rd = classify(fam, deep, 0, size_bound=1)["point_misses"]
        out.append({"cover": st["cover"], "small_misses": sum(len(v) for v in rs.values()),
                    "tail_misses": {i: v for i, v in rd.items() if v}})
    return out
