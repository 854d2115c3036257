"""Block partitions of N, block selectors and hitting-set counterexamples."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .construct import ScalePrefix, build_prefix
from .covers import ClopenSet, CoverStream
from .seqcore import (
    FiniteSet, Formula, IncSeq, Lazy, OivalError, ParseError, Point, _int, _seq,
    count_in, point_spec, register_form, relate,
)


class MOutOfBlock(OivalError):
    pass


class NoDefeaterInSample(OivalError):
    pass


# ---------------------------------------------------------------- partitions


class _Triangular(Formula):
    def nth(self, n):
        return 1 + n * (n - 1) // 2

    @property
    def spec(self):
        return "triangular"


class _Doubling(Formula):
    def nth(self, n):
        return 1 << (n - 1)

    @property
    def spec(self):
        return "doubling"


class BlockPartition:
    """Blocks I_n = [boundary(n), boundary(n+1)) with boundary(1) = 1."""

    def __init__(self, boundaries: IncSeq, name: str | None = None):
        if boundaries.nth(1) != 1:
            raise ValueError("the first block must start at 1")
        self.boundaries = boundaries
        self.name = name or boundaries.spec

    def start(self, n: int) -> int:
        return self.boundaries.nth(n)

    def block(self, n: int) -> range:
        return range(self.start(n), self.start(n + 1))

    def size(self, n: int) -> int:
        return self.start(n + 1) - self.start(n)

    def block_of(self, v: int) -> int:
        return self.boundaries.count_below(v + 1)

    def __eq__(self, other):
        return isinstance(other, BlockPartition) and self.name == other.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"BlockPartition({self.name})"


def default_partition(growth: str = "linear") -> BlockPartition:
    if growth == "linear":
        return BlockPartition(_Triangular(), "linear")
    if growth == "doubling":
        return BlockPartition(_Doubling(), "doubling")
    raise ValueError(f"unknown partition growth {growth!r}")


# ---------------------------------------------------------------- selectors


def parse_width(width) -> tuple[str, Callable[[int], int]]:
    """'const k' / k / 'id' -> (canonical name, function)."""
    if isinstance(width, int):
        width = f"const {width}"
    if width == "id":
        return "id", lambda n: n
    parts = str(width).split()
    if len(parts) == 2 and parts[0] == "const" and parts[1].isdigit() and int(parts[1]) >= 1:
        k = int(parts[1])
        return f"const {k}", lambda n: k
    raise ValueError(f"width must be 'const k' or 'id', got {width!r}")


RULES = ("first", "last")


class BlockSelector:
    """g(n) ⊆ I_n of size min(f(n), |I_n|): explicit choices first, a positional rule otherwise."""

    def __init__(self, part: BlockPartition, width="const 1", rule: str = "first",
                 explicit: dict | None = None):
        if rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}")
        self.part = part
        self.width_name, self.width = parse_width(width)
        self.rule = rule
        self.explicit = {}
        for n, chosen in (explicit or {}).items():
            chosen = tuple(sorted(set(chosen)))
            block = part.block(n)
            if any(m not in block for m in chosen):
                raise MOutOfBlock(f"choice {chosen} not inside block {n}")
            if len(chosen) != self.size(n):
                raise ValueError(f"block {n} needs {self.size(n)} choices, got {len(chosen)}")
            self.explicit[n] = chosen

    def size(self, n: int) -> int:
        return min(self.width(n), self.part.size(n))

    def __call__(self, n: int) -> tuple[int, ...]:
        hit = self.explicit.get(n)
        if hit is not None:
            return hit
        lo, hi = self.part.start(n), self.part.start(n + 1)
        w = self.size(n)
        return tuple(range(lo, lo + w) if self.rule == "first" else range(hi - w, hi))

    @property
    def spec(self) -> str:
        width = "id" if self.width_name == "id" else self.width_name.split()[1]
        extra = "".join(f", {n}={'.'.join(map(str, c))}" for n, c in sorted(self.explicit.items()))
        sep = ";" if extra else ""
        return f"sel({self.part.name}, {width}, {self.rule}{sep}{extra.lstrip(',')})"

    def __repr__(self):
        return self.spec


class BlockUnion(Lazy):
    """⋃_{n ∈ index} g(n)."""

    def __init__(self, index: IncSeq, selector: BlockSelector):
        super().__init__()
        self.index = index
        self.selector = selector

    @property
    def spec(self):
        return f"bunion({self.index.spec}; {self.selector.spec})"

    def _generate(self):
        for n in self.index:
            yield from self.selector(n)

    def __contains__(self, k):
        if k < 1:
            return False
        n = self.selector.part.block_of(k)
        return k in self.selector(n) and n in self.index


class KunIndex(Lazy):
    """m_1 < m_2 < ... with s(k n) < min I_{m_n} and |I_{m_n}| >= k."""

    def __init__(self, s: IncSeq, k: int, part: BlockPartition):
        super().__init__()
        self.s, self.k, self.part = s, k, part

    @property
    def spec(self):
        return f"kun({self.s.spec}; {self.k}; {self.part.name})"

    def _generate(self):
        m = 0
        n = 0
        while True:
            n += 1
            bound = self.s.nth(self.k * n)
            m = max(m + 1, self.part.block_of(bound) + 1)
            while self.part.size(m) < self.k:
                m += 1
            yield m


class SparseIndex(Lazy):
    """Blocks separated by at least two points of s."""

    def __init__(self, s: IncSeq, selector: BlockSelector):
        super().__init__()
        self.s, self.selector = s, selector

    @property
    def spec(self):
        return f"sparse_idx({self.s.spec}; {self.selector.spec})"

    def _generate(self):
        part, k = self.selector.part, self.selector.width(1)
        m = 1
        while part.size(m) < k:
            m += 1
        while True:
            yield m
            top = max(self.selector(m))
            # the second s-point above the chosen block, then the first block past it
            i, _ = self.s.next_geq(top + 1)
            second = self.s.nth(i + 1)
            m = max(m + 1, part.block_of(second) + 1)
            while part.size(m) < k:
                m += 1


def _sel_from_call(c) -> BlockSelector:
    args = c.sections[0]
    if len(args) != 3:
        raise ParseError("sel needs (partition, width, rule)")
    part_name, width, rule = args
    width = "id" if width == "id" else f"const {_int(width, 'width')}"
    explicit = {}
    for key, val in c.keywords.items():
        if not key.isdigit():
            raise ParseError(f"sel: unexpected keyword {key!r}")
        explicit[int(key)] = val if isinstance(val, tuple) else (val,)
    return BlockSelector(default_partition(part_name), width, rule, explicit)


@register_form("sel")
def _b_sel(c):
    return _sel_from_call(c)


@register_form("bunion")
def _b_bunion(c):
    if len(c.sections) != 2 or len(c.sections[1]) != 1:
        raise ParseError("bunion needs (index; sel(...))")
    sel = _sel_from_call(c.sections[1][0]) if getattr(c.sections[1][0], "name", "") == "sel" else None
    if sel is None:
        raise ParseError("bunion's second section must be sel(...)")
    index = _seq(c.sections[0][0])
    return BlockUnion(index, sel)


@register_form("kun")
def _b_kun(c):
    s = _seq(c.sections[0][0])
    k = _int(c.sections[1][0], "k")
    return KunIndex(s, k, default_partition(c.sections[2][0]))


@register_form("sparse_idx")
def _b_sparse_idx(c):
    s = _seq(c.sections[0][0])
    node = c.sections[1][0]
    if getattr(node, "name", "") != "sel":
        raise ParseError("sparse_idx's second section must be sel(...)")
    return SparseIndex(s, _sel_from_call(node))


# ---------------------------------------------------------------- operations


def basic_open(part: BlockPartition, n: int, m: int) -> ClopenSet:
    """{x : m ∉ x} for m ∈ I_n."""
    if m not in part.block(n):
        raise MOutOfBlock(f"{m} is not in block {n} = [{part.start(n)}, {part.start(n + 1)})")
    return ClopenSet.avoid(m)


class BlockCover(CoverStream):
    """The finite point-cofinite family {O^n_m : m ∈ I_n}."""

    def __init__(self, part: BlockPartition, n: int):
        self.part, self.n = part, n

    def member(self, j):
        if not 1 <= j <= self.part.size(self.n):
            raise IndexError(j)
        return basic_open(self.part, self.n, self.part.start(self.n) + j - 1)

    def size(self):
        return self.part.size(self.n)

    def to_json(self):
        return {"generator": "blocks", "partition": self.part.name, "n": self.n}


def hitting_count(s: Point, g: BlockSelector, horizon: int) -> int:
    return sum(1 for n in range(1, horizon + 1) if all(m in s for m in g(n)))


def hitting_indices(s: Point, g, horizon: int) -> list[int]:
    return [n for n in range(1, horizon + 1) if all(m in s for m in g(n))]


def _const_width(g: BlockSelector) -> int:
    if not g.width_name.startswith("const"):
        raise ValueError("this embedding needs a constant width selector")
    return g.width(1)


def kun_embed(k: int, g: BlockSelector, s: IncSeq) -> tuple[IncSeq, IncSeq]:
    if _const_width(g) != k:
        raise ValueError("selector width differs from k")
    t = KunIndex(s, k, g.part)
    return t, BlockUnion(t, g)


def kun_check(k: int, s: IncSeq, t: IncSeq, s_prime: IncSeq, horizon: int) -> dict:
    """Pointwise s <= s' and the counting step s(kn) < s'(k(n-1)+1)."""
    pointwise = relate("le", s, s_prime, horizon)
    counting = [n for n in range(1, horizon // k + 1)
                if not s.nth(k * n) < s_prime.nth(k * (n - 1) + 1)]
    return {"pointwise": pointwise, "counting_failures": counting}


def sparse_embed(s: IncSeq, k: int, g: BlockSelector) -> tuple[IncSeq, IncSeq]:
    if _const_width(g) != k:
        raise ValueError("selector width differs from k")
    t = SparseIndex(s, g)
    return t, BlockUnion(t, g)


def window_counts(s: IncSeq, s_prime: Point, horizon: int) -> list[int]:
    """|s' ∩ (s(n), s(n+2))| for n = 1..horizon."""
    return [count_in(s_prime, s.nth(n) + 1, s.nth(n + 2) - 1) for n in range(1, horizon + 1)]


def perturbation_guard(g: BlockSelector, a: IncSeq, count: int) -> list[int]:
    """c(1..count): each open c-interval holds more than d(n) = Σ_{i<=c(n)} |g(i)| open a-intervals."""
    c = [1]
    while len(c) < count:
        cn = c[-1]
        need = sum(g.size(i) for i in range(1, cn + 1)) + 1
        i, _ = a.next_geq(cn)
        # the need-th open a-interval starting at or after c(n) ends at a(i + need)
        c.append(a.nth(i + need))
    return c


def guard_check(g: BlockSelector, a: IncSeq, c: Sequence[int], s: Point, bound: int) -> list[int]:
    """Indices n with c(n) <= bound where s omits (c(n), c(n+1)) but ⋃g[s] omits
    no open a-interval inside it.  Empty means the guarantee held."""
    if isinstance(s, FiniteSet) and c:
        # g(m) lies in block m, so blocks starting past c(last) never matter
        b = FiniteSet(tuple(e for m in s.elements if g.part.start(m) <= c[-1] for e in g(m)))
    else:
        b = perturb(s, g)
    bad = []
    for n in range(1, len(c)):
        lo, hi = c[n - 1], c[n]
        if lo > bound:
            break
        if count_in(s, lo + 1, hi - 1):
            continue
        i, ai = a.next_geq(lo)
        found = False
        while True:
            nxt = a.nth(i + 1)
            if nxt > hi:
                break
            if nxt - ai > 1 and not count_in(b, ai + 1, nxt - 1):
                found = True
                break
            i, ai = i + 1, nxt
        if not found:
            bad.append(n)
    return bad


def perturb(s: Point, g: BlockSelector) -> Point:
    if isinstance(s, FiniteSet):
        return FiniteSet(tuple(m for n in s.elements for m in g(n)))
    return BlockUnion(s, g)


# ---------------------------------------------------------------- defeaters


def induced_selector(part: BlockPartition, selection: Sequence) -> dict[int, tuple[int, ...]]:
    out = {}
    for n, pick in enumerate(selection, 1):
        group = (pick,) if isinstance(pick, int) else tuple(pick)
        for m in group:
            if m not in part.block(n):
                raise MOutOfBlock(f"selection picks {m} outside block {n}")
        out[n] = tuple(sorted(group))
    return out


def defeat_gamma_selection(part: BlockPartition, sample: Sequence[Point], selection: Sequence,
                           threshold: int = 20) -> dict:
    """Find a sample point lying outside the selected union for many n."""
    if not selection:
        raise NoDefeaterInSample("empty selection")
    g = induced_selector(part, selection)
    best, best_hits = None, []
    for idx, x in enumerate(sample):
        hits = [n for n, grp in g.items() if all(m in x for m in grp)]
        if len(hits) > len(best_hits):
            best, best_hits = idx, hits
    if best is None or len(best_hits) < threshold:
        raise NoDefeaterInSample(
            f"best sample point hits the induced selector {len(best_hits)} times, need {threshold}")
    x = sample[best]
    confirmed = all(not any(basic_open(part, n, m).contains(x) for m in g[n]) for n in best_hits)
    return {"g": {n: list(v) for n, v in g.items()}, "point": best, "point_spec": point_spec(x),
            "failures": best_hits, "confirmed": confirmed}


def greedy_selection(part: BlockPartition, fin_part: Sequence[FiniteSet], count: int,
                     width="const 1", highest: bool = False) -> list:
    """Baseline selector: per block, the lowest (or highest) members m with
    every finite sample point inside O^n_m, i.e. m outside each of them."""
    name, wf = parse_width(width)
    taken = set()
    for x in fin_part:
        taken.update(x.elements)
    out = []
    for n in range(1, count + 1):
        block = part.block(n)
        w = min(wf(n), part.size(n))
        # only w + |taken| positions from the chosen end can matter
        near = list(block[::-1][:w + len(taken)] if highest else block[:w + len(taken)])
        good = [m for m in near if m not in taken]
        picks = (good + [m for m in near if m in taken])[:w]
        out.append(picks[0] if name == "const 1" else tuple(sorted(picks)))
    return out


# ---------------------------------------------------------------- build plans

PLANS = {
    # theorem plan -> (scale kind, embedding, widths enumerated, partition)
    "u2nots1": ("sqe", "sparse", ["const 1"], "linear"),
    "uidnotuk": ("le_star", "kun", ["const 1", "const 2", "const 3"], "linear"),
    "uk+1notuk": ("sqe", "sparse", ["const 2"], "linear"),
    "ufognonuidgg": ("le_star", "perturb", ["id"], "doubling"),
}


@dataclass
class RefinedPrefix:
    plan: str
    partition: BlockPartition
    base: ScalePrefix
    selectors: list
    indices: list
    members: list = field(default_factory=list)

    def to_json(self, horizon: int) -> dict:
        return {
            "plan": self.plan,
            "partition": self.partition.name,
            "base": [s.spec for s in self.base.members],
            "selectors": [g.spec for g in self.selectors],
            "indices": [t.prefix(min(horizon, 32)) if isinstance(t, IncSeq) else t for t in self.indices],
            "members": [m.prefix(min(horizon, 32)) for m in self.members],
        }


def build_refined(plan: str, oracle: Sequence[IncSeq], steps: int, horizon: int = 1000,
                  partition: str | None = None, width=None, embed: str | None = None) -> RefinedPrefix:
    """Scale prefix + one enumerated selector per member + the plan's embedding."""
    if plan not in PLANS:
        raise ValueError(f"unknown plan {plan!r}")
    kind, default_embed, widths, default_part = PLANS[plan]
    embed = embed or default_embed
    part = default_partition(partition or default_part)
    if width is not None:
        widths = [parse_width(width)[0]]
    base = build_prefix(kind, oracle, steps, horizon)
    out = RefinedPrefix(plan, part, base, [], [])
    combos = [(w, r) for w in widths for r in RULES]
    for i, s in enumerate(base.members):
        w, r = combos[i % len(combos)]
        g = BlockSelector(part, w, r)
        if embed == "kun":
            t, sp = kun_embed(g.width(1), g, s)
        elif embed == "sparse":
            t, sp = sparse_embed(s, g.width(1), g)
        elif embed == "perturb":
            t, sp = s, perturb(s, g)
        else:
            raise ValueError(f"unknown embedding {embed!r}")
        out.selectors.append(g)
        out.indices.append(t)
        out.members.append(sp)
    return out


def verify_refined(ref: RefinedPrefix, horizon: int) -> dict:
    """Re-check the plan invariant for every member."""
    report = []
    for s, t, sp, g in zip(ref.base.members, ref.indices, ref.members, ref.selectors):
        entry = {"member": sp.spec}
        if ref.plan == "uidnotuk":
            k = g.width(1)
            chk = kun_check(k, s, t, sp, horizon)
            entry["ok"] = chk["pointwise"].holds and not chk["counting_failures"]
        elif ref.plan in ("u2nots1", "uk+1notuk"):
            k = g.width(1)
            entry["max_window"] = max(window_counts(s, sp, horizon))
            entry["ok"] = entry["max_window"] <= k
            if k == 1:
                v = relate("sqe", s, sp, horizon)
                entry["sqe"] = v.outcome
                entry["ok"] = entry["ok"] and v.holds
        else:
            idx = s.upto(horizon)
            entry["ok"] = all(len([m for m in g(n) if m in sp]) == g.size(n) for n in idx)
        report.append(entry)
    return {"members": report, "ok": all(e["ok"] for e in report)}

