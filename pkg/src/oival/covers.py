"""Clopen subsets of P(N), cover streams and the Galvin-Miller extraction.

A clopen set of depth d is stored as a union of cubes.  A cube is a pair of
bitmasks (care, value) over the bits 0..d-1 (bit i-1 stands for i) and
holds the points x whose trace x ∩ [1, d] agrees with `value` on `care`.
A set of full traces is the special case care = all bits.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

from .seqcore import FiniteSet, IncSeq, OivalError, Point, holds, fails_at, unknown, trace_mask

TRACE_LIMIT = 20
SCAN_LIMIT = 10**4


class NotAnOmegaWitness(OivalError):
    pass


class NotCovered(OivalError):
    def __init__(self, n, msg=""):
        super().__init__(msg or f"point not covered by cover {n}")
        self.n = n


class OmegaQueryFailed(OivalError):
    pass


def _bits(elements: Iterable[int]) -> int:
    m = 0
    for e in elements:
        m |= 1 << (e - 1)
    return m


def _elements(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _cube_subset(c1, c2) -> bool:
    """cube c1 ⊆ cube c2."""
    care1, val1 = c1
    care2, val2 = c2
    return care2 & ~care1 == 0 and (val1 & care2) == val2


def _absorb(cubes) -> frozenset:
    cubes = sorted(set(cubes), key=lambda c: (bin(c[0]).count("1"), c))
    kept = []
    for c in cubes:
        if not any(_cube_subset(c, k) for k in kept):
            kept.append(c)
    return frozenset(kept)


@dataclass(frozen=True)
class Cylinder:
    depth: int
    trace: frozenset

    def __post_init__(self):
        object.__setattr__(self, "trace", frozenset(self.trace))
        if any(t < 1 or t > self.depth for t in self.trace):
            raise ValueError("trace must lie in [1, depth]")

    def contains(self, x: Point) -> bool:
        return set(x.upto(self.depth)) == self.trace

    def to_clopen(self) -> "ClopenSet":
        return ClopenSet.from_traces(self.depth, [self.trace])


class ClopenSet:
    __slots__ = ("depth", "cubes")

    def __init__(self, depth: int, cubes: Iterable[tuple[int, int]] = ()):
        cubes = _absorb(cubes)
        limit = (1 << depth) - 1
        for care, val in cubes:
            if care & ~limit or val & ~care:
                raise ValueError("cube outside depth")
        self.depth = depth
        self.cubes = cubes

    # construction
    @classmethod
    def from_traces(cls, depth: int, traces: Iterable[Iterable[int]]):
        full = (1 << depth) - 1
        return cls(depth, [(full, _bits(t)) for t in traces])

    @classmethod
    def universal(cls, depth: int = 0):
        return cls(depth, [(0, 0)])

    @classmethod
    def empty(cls, depth: int = 0):
        return cls(depth, [])

    @classmethod
    def avoid(cls, m: int):
        """{x : m ∉ x}."""
        return cls(m, [(1 << (m - 1), 0)])

    @classmethod
    def require(cls, m: int):
        """{x : m ∈ x}."""
        b = 1 << (m - 1)
        return cls(m, [(b, b)])

    @classmethod
    def region_below(cls, bound: int, depth: int):
        """Points whose trace at `depth` lies inside [1, bound]."""
        care = ((1 << depth) - 1) & ~((1 << bound) - 1) if depth > bound else 0
        return cls(max(depth, 0), [(care, 0)])

    # membership
    def contains_mask(self, mask: int) -> bool:
        return any((mask & care) == val for care, val in self.cubes)

    def contains(self, x: Point) -> bool:
        if not self.cubes:
            return False
        return self.contains_mask(trace_mask(x, self.depth))

    # algebra
    def union(self, other: "ClopenSet") -> "ClopenSet":
        return ClopenSet(max(self.depth, other.depth), self.cubes | other.cubes)

    def intersect(self, other: "ClopenSet") -> "ClopenSet":
        out = []
        for c1, v1 in self.cubes:
            for c2, v2 in other.cubes:
                if (v1 ^ v2) & c1 & c2 == 0:
                    out.append((c1 | c2, v1 | v2))
        return ClopenSet(max(self.depth, other.depth), out)

    def complement(self) -> "ClopenSet":
        result = ClopenSet.universal(self.depth)
        for care, val in self.cubes:
            parts = []
            bit = 1
            while bit <= care:
                if care & bit:
                    parts.append((bit, (~val) & bit))
                bit <<= 1
            result = result.intersect(ClopenSet(self.depth, parts))
            if not result.cubes:
                break
        return result

    def minus(self, other: "ClopenSet") -> "ClopenSet":
        if not other.cubes:
            return self
        return self.intersect(other.complement().deepen(max(self.depth, other.depth)))

    def deepen(self, depth: int) -> "ClopenSet":
        if depth < self.depth:
            raise ValueError("cannot shrink depth")
        return ClopenSet(depth, self.cubes)

    def is_empty(self) -> bool:
        return not self.cubes

    def subset_of(self, other: "ClopenSet") -> bool:
        return self.minus(other).is_empty()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClopenSet):
            return NotImplemented
        return self.subset_of(other) and other.subset_of(self)

    def __hash__(self):
        return hash(self.canonical_key())

    def traces(self, depth: int | None = None) -> list[tuple[int, ...]]:
        """All traces at the given depth, sorted; exponential, small depths only."""
        d = self.depth if depth is None else depth
        if d < self.depth:
            raise ValueError("depth below the representation depth")
        if d > TRACE_LIMIT:
            raise ValueError(f"trace enumeration capped at depth {TRACE_LIMIT}")
        masks = set()
        full = (1 << d) - 1
        for care, val in self.cubes:
            free = full & ~care
            sub = free
            while True:
                masks.add(val | sub)
                if sub == 0:
                    break
                sub = (sub - 1) & free
        return sorted(_elements(m) for m in masks)

    def canonical_key(self):
        """A form equal for equal sets: traces when small, otherwise the
        disjoint expansion of the cubes over their joint care bits."""
        d = self.depth
        care_all = 0
        for care, _ in self.cubes:
            care_all |= care
        if bin(care_all).count("1") <= TRACE_LIMIT:
            bits = [b for b in range(d) if care_all >> b & 1]
            vals = set()
            for care, val in self.cubes:
                free = [b for b in bits if not care >> b & 1]
                for combo in range(1 << len(free)):
                    v = val
                    for i, b in enumerate(free):
                        if combo >> i & 1:
                            v |= 1 << b
                    vals.add(v)
            return ("masks", care_all, tuple(sorted(vals)))
        return ("cubes", tuple(sorted(self.cubes)))

    def to_json(self) -> dict:
        if self.depth <= 16:
            return {"depth": self.depth, "traces": [list(t) for t in self.traces()]}
        return {"depth": self.depth,
                "cubes": [[list(_elements(c)), list(_elements(v))] for c, v in sorted(self.cubes)]}

    def __repr__(self):
        return f"ClopenSet(depth={self.depth}, cubes={len(self.cubes)})"


def clopen_contains(U: ClopenSet, x: Point) -> bool:
    return U.contains(x)


def contains_all_below(U: ClopenSet, bound: int) -> bool:
    """Every finite σ ⊆ [1, bound] lies in U."""
    depth = max(U.depth, bound)
    return ClopenSet.region_below(bound, depth).subset_of(U.deepen(depth))


def clopen_modulus(U: ClopenSet, bound: int, exhaustive_limit: int = 12) -> int:
    """Least safe modulus: every x with x ∩ [1, m) ⊆ [1, bound] lies in U.

    The cube containment test is exact; small cases are also re-checked
    trace by trace."""
    if not contains_all_below(U, bound):
        raise NotAnOmegaWitness(f"some subset of [1,{bound}] lies outside the member")
    top = min(bound, U.depth)
    if top <= exhaustive_limit:
        for mask in range(1 << top):
            if not U.contains_mask(mask):
                raise NotAnOmegaWitness(f"trace {_elements(mask)} outside the member")
    return max(U.depth + 1, bound + 1)


# ---------------------------------------------------------------- cover streams


class CoverStream:
    """Enumerator m -> ClopenSet (1-based) with an ω-query."""

    no_finite_subcover = False

    def member(self, m: int) -> ClopenSet:
        raise NotImplementedError

    def size(self) -> int | None:
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def prefix(self, count: int) -> list[ClopenSet]:
        n = self.size()
        if n is not None:
            count = min(count, n)
        return [self.member(m) for m in range(1, count + 1)]

    def _candidates(self, start=1):
        n = self.size()
        stop = SCAN_LIMIT if n is None else n
        return range(start, stop + 1)

    def omega_query(self, points: Sequence[Point] = (), below: int | None = None,
                    exclude: Iterable[int] = (), allowed=None) -> int:
        """Least fresh member index containing every point and, when `below`
        is given, every finite subset of [1, below]."""
        exclude = set(exclude)
        for m in self._candidates():
            if m in exclude or (allowed is not None and not allowed(m)):
                continue
            U = self.member(m)
            if below is not None and not contains_all_below(U, below):
                continue
            if all(U.contains(x) for x in points):
                return m
        raise OmegaQueryFailed("no fresh member contains the requested family")


class RunsCover(CoverStream):
    """Member m = {x : x misses one of m, ..., m+w-1}; w = 1 gives O_m = {x : m ∉ x}."""

    no_finite_subcover = True

    def __init__(self, width: int = 1):
        if width < 1:
            raise ValueError("width must be >= 1")
        self.width = width
        self._memo: dict[int, ClopenSet] = {}

    def member(self, m):
        U = self._memo.get(m)
        if U is None:
            d = m + self.width - 1
            U = ClopenSet(d, [(1 << (j - 1), 0) for j in range(m, d + 1)])
            self._memo[m] = U
        return U

    def omega_query(self, points=(), below=None, exclude=(), allowed=None):
        # all of P([1, below]) fits exactly when the run starts past below - width + 1
        exclude = set(exclude)
        start = 1 if below is None else max(1, below - self.width + 2)
        for m in range(start, start + SCAN_LIMIT):
            if m in exclude or (allowed is not None and not allowed(m)):
                continue
            U = self.member(m)
            if all(U.contains(x) for x in points):
                return m
        raise OmegaQueryFailed("no fresh member contains the requested family")

    def to_json(self):
        return {"generator": "Om"} if self.width == 1 else {"generator": "runs", "w": self.width}


def om_cover() -> RunsCover:
    return RunsCover(1)


class ExplicitCover(CoverStream):
    def __init__(self, members: Sequence[ClopenSet]):
        self.members = list(members)

    def member(self, m):
        if not 1 <= m <= len(self.members):
            raise IndexError(f"member {m} outside the finite cover")
        return self.members[m - 1]

    def size(self):
        return len(self.members)

    def to_json(self):
        depth = max((U.depth for U in self.members), default=0)
        if depth > 16:
            return {"depth": depth, "members": [U.to_json() for U in self.members]}
        return {"depth": depth,
                "members": [[list(t) for t in U.deepen(depth).traces()] for U in self.members]}


def column_member(n: int, m: int) -> ClopenSet:
    """{x : the n-th element of x equals m}."""
    if m < n:
        return ClopenSet.empty(m)
    top = 1 << (m - 1)
    cubes = []
    for rest in itertools.combinations(range(m - 1), n - 1):
        cubes.append(((1 << m) - 1, top | _bits(r + 1 for r in rest)))
    return ClopenSet(m, cubes)


def column_cover(n: int, count: int) -> list[ClopenSet]:
    """Prefix of the disjoint cover {x : x(n) = m}, m = 1..count."""
    if comb(count - 1, n - 1) > 50_000:
        raise ValueError("column cover too large to tabulate")
    return [column_member(n, m) for m in range(1, count + 1)]


# ---------------------------------------------------------------- operations


def refine_disjoint(cover, count: int) -> list[ClopenSet]:
    members = cover.prefix(count) if isinstance(cover, CoverStream) else list(cover)[:count]
    out, seen = [], None
    for C in members:
        out.append(C if seen is None else C.minus(seen))
        seen = C if seen is None else seen.union(C)
    return out


def increasing_union_cover(members: Sequence[ClopenSet]) -> list[ClopenSet]:
    out, acc = [], None
    for U in members:
        acc = U if acc is None else acc.union(U)
        out.append(acc)
    return out


def reclaw_map(covers: Sequence[Sequence[ClopenSet]], x: Point) -> tuple[list[int], list[int]]:
    """Values f_x(n) (the unique member index holding x) and their moduli."""
    values, moduli = [], []
    for n, cover in enumerate(covers, 1):
        hits = [m for m, U in enumerate(cover, 1) if U.contains(x)]
        if not hits:
            raise NotCovered(n)
        if len(hits) > 1:
            raise ValueError(f"cover {n} is not disjoint at this point")
        values.append(hits[0])
        moduli.append(cover[hits[0] - 1].depth)
    return values, moduli


@dataclass
class GMResult:
    a: list            # a(1..N+1) for k = 0, b(1..N+1) for k >= 1
    groups: list       # per n, a (k+1)-tuple of member indices
    base_a: list       # the underlying k = 0 sequence
    base_members: list
    k: int = 0

    @property
    def members(self) -> list[int]:
        return [g[0] for g in self.groups] if self.k == 0 else [m for g in self.groups for m in g]

    def to_json(self):
        return {"k": self.k, "a": self.a, "groups": [list(g) for g in self.groups]}


def gm_extract(cover: CoverStream, k: int, N: int, allowed=None, points=()) -> GMResult:
    """Omission of the open interval (a(n), a(n+1)) forces membership in U_n;
    for k >= 1, at most k points in (b(n), b(n+1)) force membership in group n.

    `points` are extra finite-family members every chosen U_n must contain."""
    total = (k + 1) * N
    a = [1]
    chosen: list[int] = []
    for _ in range(total):
        m = cover.omega_query(points, below=a[-1], exclude=chosen, allowed=allowed)
        a.append(clopen_modulus(cover.member(m), a[-1]))
        chosen.append(m)
    if k == 0:
        return GMResult(a, [(m,) for m in chosen], a, chosen, 0)
    b = [a[(k + 1) * (n - 1)] for n in range(1, N + 2)]
    groups = [tuple(chosen[(k + 1) * (n - 1):(k + 1) * n]) for n in range(1, N + 1)]
    return GMResult(b, groups, a, chosen, k)


def classify(prefix: Sequence[ClopenSet], sample: Sequence[Point], horizon: int = 0,
             size_bound: int = 3) -> dict:
    M = len(prefix)
    if M == 0:
        return {"is_omega": False, "omega_failures": [], "point_misses": {},
                "is_point_cofinite": unknown(0)}
    table = [[U.contains(x) for U in prefix] for x in sample]
    failures = []
    for r in range(1, min(size_bound, len(sample)) + 1):
        for combo in itertools.combinations(range(len(sample)), r):
            if not any(all(table[i][m] for i in combo) for m in range(M)):
                failures.append(list(combo))
    misses = {i: [m + 1 for m in range(M) if not row[m]] for i, row in enumerate(table)}
    late = sorted(m for ms in misses.values() for m in ms if m > M // 2)
    verdict = fails_at(M, late[0]) if late else holds(M, range(M // 2 + 1, M + 1))
    return {"is_omega": not failures, "omega_failures": failures,
            "point_misses": misses, "is_point_cofinite": verdict}


def pairing(n: int, k: int) -> int:
    return (1 << (n - 1)) * (2 * k - 1)


def unpair(v: int) -> tuple[int, int]:
    n = (v & -v).bit_length()
    return n, ((v >> (n - 1)) + 1) // 2


def cantor_defeater(xs: Sequence[Point], selections: Sequence[int], depth: int = 64) -> dict:
    """Diagonal f(n) = x_{m_n}, encoded as the set {<n,k> : k ∈ f(n)}, with a
    certificate that f lies outside every selected {f : f(n) ≠ x_m}."""
    specs = [x.spec for x in xs]
    if len(set(specs)) != len(specs):
        raise ValueError("points must be distinct")
    f = [xs[m - 1] for m in selections]
    code = sorted(pairing(n, k) for n, x in enumerate(f, 1) for k in x.upto(depth))
    z = FiniteSet(tuple(code))
    by_n: dict[int, list[int]] = {}
    for v in z.elements:
        n, k = unpair(v)
        by_n.setdefault(n, []).append(k)
    certificate = []
    for n, m in enumerate(selections, 1):
        decoded = tuple(sorted(by_n.get(n, [])))
        certificate.append(decoded == tuple(xs[m - 1].upto(depth)))
    return {"f": f, "encoded": z, "certificate": certificate}


# ---------------------------------------------------------------- JSON


def cover_from_json(obj: dict, where: str = "cover") -> list[CoverStream]:
    """One JSON cover entry -> list of streams (`copies` repeats it)."""
    from .seqcore import ParseError
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    copies = obj.get("copies", 1)
    if not isinstance(copies, int) or copies < 1:
        raise ParseError(f"{where}.copies: expected a positive integer")
    gen = obj.get("generator")
    if gen == "Om":
        make = lambda: RunsCover(1)
    elif gen == "runs":
        w = obj.get("w")
        if not isinstance(w, int) or w < 1:
            raise ParseError(f"{where}.w: expected a positive integer")
        make = lambda: RunsCover(w)
    elif gen == "blocks":
        from .hitting import BlockCover, default_partition
        part = obj.get("partition", "linear")
        n = obj.get("n")
        if not isinstance(n, int) or n < 1:
            raise ParseError(f"{where}.n: expected a positive integer")
        make = lambda: BlockCover(default_partition(part), n)
    elif gen is None:
        depth = obj.get("depth")
        members = obj.get("members")
        if not isinstance(depth, int) or depth < 0:
            raise ParseError(f"{where}.depth: expected a natural number")
        if not isinstance(members, list):
            raise ParseError(f"{where}.members: expected a list of trace lists")
        sets = []
        for i, traces in enumerate(members):
            if not isinstance(traces, list) or not all(
                    isinstance(t, list) and all(isinstance(e, int) and 1 <= e <= depth for e in t)
                    for t in traces):
                raise ParseError(f"{where}.members[{i}]: traces must be lists of ints in [1,{depth}]")
            sets.append(ClopenSet.from_traces(depth, traces))
        make = lambda: ExplicitCover(sets)
    else:
        raise ParseError(f"{where}.generator: unknown generator {gen!r}")
    return [make() for _ in range(copies)]
