"""Exact infinite subsets of the naturals, natural intervals and order relations.

An infinite set is handled through its increasing enumeration (1-based).
Every sequence carries a canonical spec string in a small DSL so that it
can be written to a trace and parsed back.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence, Union

SCAN_LIMIT = 10**6


class OivalError(Exception):
    """Base class of all package errors."""


class DescriptorExhausted(OivalError):
    pass


class IndistinguishableUpToHorizon(OivalError):
    pass


class XEqualsN(OivalError):
    pass


class ParseError(OivalError):
    pass


# ---------------------------------------------------------------- sequences


class IncSeq:
    """A strictly increasing enumeration n -> s(n) of an infinite set."""

    def nth(self, n: int) -> int:
        raise NotImplementedError

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def next_geq(self, v: int) -> tuple[int, int]:
        """Return (index, value) of the least element >= v."""
        raise NotImplementedError

    def __contains__(self, k: int) -> bool:
        if k < 1:
            return False
        return self.next_geq(k)[1] == k

    def count_below(self, v: int) -> int:
        """Number of elements strictly below v."""
        if v <= 1:
            return 0
        return self.next_geq(v)[0] - 1

    def floor_index(self, v: int) -> int:
        """Largest n with s(n) <= v, or 0."""
        return self.count_below(v + 1)

    def prefix(self, n: int) -> list[int]:
        return [self.nth(i) for i in range(1, n + 1)]

    def upto(self, v: int) -> list[int]:
        out = []
        i = 1
        while True:
            x = self.nth(i)
            if x > v:
                return out
            out.append(x)
            i += 1

    def least_geq(self, v: int) -> int:
        """Least element >= v, without committing to its index."""
        return self.next_geq(v)[1]

    def next_nonmember(self, v: int) -> int:
        while v in self:
            v += 1
        return v

    def min_missing(self) -> int | None:
        """Least natural number outside the set, None when the set is all of N."""
        for k in range(1, SCAN_LIMIT + 1):
            if self.nth(k) != k:
                return k
        raise IndistinguishableUpToHorizon(
            f"{self.spec} agrees with N up to {SCAN_LIMIT}")

    def affine_tail(self):
        """(m0, d, c) with s(m) = d*m + c for all m >= m0, or None if unknown."""
        return None

    def is_everything(self) -> bool:
        return self.min_missing() is None

    def __iter__(self) -> Iterator[int]:
        i = 1
        while True:
            yield self.nth(i)
            i += 1

    def __repr__(self) -> str:
        return f"IncSeq({self.spec})"

    def __eq__(self, other) -> bool:
        return isinstance(other, IncSeq) and other.spec == self.spec

    def __hash__(self) -> int:
        return hash(self.spec)


class Identity(IncSeq):
    def nth(self, n):
        _check_index(n)
        return n

    @property
    def spec(self):
        return "id"

    def next_geq(self, v):
        v = max(v, 1)
        return v, v

    def upto(self, v):
        return list(range(1, v + 1))

    def affine_tail(self):
        return 1, 1, 0

    def min_missing(self):
        return None

    def next_nonmember(self, v):
        raise DescriptorExhausted("the identity has no non-members")


class Arith(IncSeq):
    """start, start+step, start+2*step, ..."""

    def __init__(self, start: int, step: int):
        if start < 1 or step < 1:
            raise ValueError("arith needs start >= 1 and step >= 1")
        self.start = start
        self.step = step

    def nth(self, n):
        _check_index(n)
        return self.start + (n - 1) * self.step

    @property
    def spec(self):
        return f"arith({self.start},{self.step})"

    def next_geq(self, v):
        if v <= self.start:
            return 1, self.start
        i = -(-(v - self.start) // self.step) + 1
        return i, self.nth(i)

    def __contains__(self, k):
        return k >= self.start and (k - self.start) % self.step == 0

    def upto(self, v):
        return list(range(self.start, v + 1, self.step))

    def affine_tail(self):
        return 1, self.step, self.start - self.step

    def min_missing(self):
        if self.start == 1 and self.step == 1:
            return None
        return 1 if self.start > 1 else 2

    def next_nonmember(self, v):
        if self.step == 1 and v >= self.start:
            raise DescriptorExhausted("cofinite arithmetic sequence")
        while v in self:
            v += 1
        return v


class Pow(IncSeq):
    """base, base^2, base^3, ..."""

    def __init__(self, base: int):
        if base < 2:
            raise ValueError("pow needs base >= 2")
        self.base = base

    def nth(self, n):
        _check_index(n)
        return self.base ** n

    @property
    def spec(self):
        return f"pow({self.base})"

    def next_geq(self, v):
        i, x = 1, self.base
        while x < v:
            i += 1
            x *= self.base
        return i, x

    def min_missing(self):
        return 1


class Listed(IncSeq):
    """An explicit prefix followed by the elements of an arithmetic tail that
    exceed the prefix.  Without a tail the sequence is a finite certificate
    and asking past its end raises DescriptorExhausted."""

    def __init__(self, prefix: Sequence[int], tail: Arith | None = None):
        prefix = tuple(prefix)
        if any(b <= a for a, b in zip(prefix, prefix[1:])) or (prefix and prefix[0] < 1):
            raise ValueError("list prefix must be strictly increasing and positive")
        if not prefix and tail is None:
            raise ValueError("empty list without tail")
        self.head = prefix
        self.tail = tail
        self._head_set = frozenset(prefix)
        if tail is not None:
            last = prefix[-1] if prefix else 0
            self._j0 = tail.next_geq(last + 1)[0]

    def nth(self, n):
        _check_index(n)
        L = len(self.head)
        if n <= L:
            return self.head[n - 1]
        if self.tail is None:
            raise DescriptorExhausted(f"{self.spec} has only {L} elements")
        return self.tail.start + (self._j0 - 1 + n - L - 1) * self.tail.step

    @property
    def spec(self):
        body = ",".join(map(str, self.head))
        if self.tail is None:
            return f"list({body})"
        return f"list({body}; {self.tail.spec})" if body else f"list(; {self.tail.spec})"

    def next_geq(self, v):
        i = bisect.bisect_left(self.head, v)
        if i < len(self.head):
            return i + 1, self.head[i]
        if self.tail is None:
            raise DescriptorExhausted(f"{self.spec} has no element >= {v}")
        j, x = self.tail.next_geq(v)
        j = max(j, self._j0)
        return len(self.head) + j - self._j0 + 1, self.tail.nth(j)

    def affine_tail(self):
        if self.tail is None:
            return None
        L, d = len(self.head), self.tail.step
        return L + 1, d, self.tail.start + (self._j0 - L - 2) * d

    def __contains__(self, k):
        if k in self._head_set:
            return True
        if self.tail is None or (self.head and k <= self.head[-1]):
            return False
        return k in self.tail

    def min_missing(self):
        for i, x in enumerate(self.head, 1):
            if x != i:
                return i
        if self.tail is None:
            return len(self.head) + 1
        L = len(self.head)
        first = self.nth(L + 1)
        if first != L + 1:
            return L + 1
        return None if self.tail.step == 1 else L + 2

    def next_nonmember(self, v):
        if self.tail is not None and self.tail.step == 1 and self.head and v > self.head[-1]:
            raise DescriptorExhausted("cofinite tail")
        if self.tail is not None and self.tail.step == 1 and not self.head and v >= self.tail.start:
            raise DescriptorExhausted("cofinite tail")
        return super().next_nonmember(v)


class Lazy(IncSeq):
    """Sequence produced by a generator, with the enumeration cached.

    The cache is an internal memo; the represented set never changes.
    """

    def __init__(self):
        self._cache: list[int] = []
        self._gen: Iterator[int] | None = None
        self._done = False

    def _generate(self) -> Iterator[int]:
        raise NotImplementedError

    def _pull(self) -> bool:
        if self._done:
            return False
        if self._gen is None:
            self._gen = self._generate()
        try:
            x = next(self._gen)
        except StopIteration:
            self._done = True
            return False
        if self._cache and x <= self._cache[-1]:
            raise AssertionError(f"{self.spec} produced a non-increasing value")
        self._cache.append(x)
        return True

    def nth(self, n):
        _check_index(n)
        c = self._cache
        while len(c) < n:
            if not self._pull():
                raise DescriptorExhausted(f"{self.spec} exhausted before index {n}")
        return c[n - 1]

    def next_geq(self, v):
        c = self._cache
        while not c or c[-1] < v:
            if not self._pull():
                raise DescriptorExhausted(f"{self.spec} has no element >= {v}")
        i = bisect.bisect_left(c, v)
        return i + 1, c[i]

    def __contains__(self, k):
        if k < 1:
            return False
        try:
            return self.next_geq(k)[1] == k
        except DescriptorExhausted:
            return False

    def upto(self, v):
        c = self._cache
        while (not c or c[-1] <= v) and self._pull():
            pass
        return c[: bisect.bisect_right(c, v)]


class Formula(IncSeq):
    """Sequence with a direct nth; searches use galloping over the index."""

    def next_geq(self, v):
        hi = 1
        while self.nth(hi) < v:
            hi *= 2
        lo = hi // 2 + 1 if hi > 1 else 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.nth(mid) < v:
                lo = mid + 1
            else:
                hi = mid
        return lo, self.nth(lo)


class Complement(Lazy):
    """Complement of `base`; `cert` is a sub-stream of the complement that
    certifies it has at least as many elements as requested."""

    def __init__(self, base: IncSeq, cert: IncSeq):
        super().__init__()
        self.base = base
        self.cert = cert

    @property
    def spec(self):
        return f"compl({self.base.spec}; cert={self.cert.spec})"

    def _generate(self):
        v = 1
        while True:
            # a certificate element at or above v outside base bounds the search
            w = self.cert.least_geq(v)
            if w in self.base:
                raise DescriptorExhausted(
                    f"certificate element {w} lies in {self.base.spec}")
            v = self.base.next_nonmember(v)
            # every value before the next member of base is a nonmember too
            stop = self.base.next_geq(v)[1]
            yield from range(v, stop)
            v = stop

    def __contains__(self, k):
        return k >= 1 and k not in self.base


class IntervalUnion(IncSeq):
    """Union of [a(n), a(n+1)) over n in the index set b."""

    def __init__(self, index: IncSeq, base: IncSeq):
        self.index = index
        self.base = base
        self._cum = [0]  # _cum[j] = total length of the first j intervals
        self._lows = [None]  # _lows[j] = left end of interval j

    @property
    def spec(self):
        return f"iunion({self.index.spec}, {self.base.spec})"

    def _block(self, j):
        n = self.index.nth(j)
        return self.base.nth(n), self.base.nth(n + 1)

    def _extend(self, j):
        cum = self._cum
        while len(cum) <= j:
            lo, hi = self._block(len(cum))
            cum.append(cum[-1] + hi - lo)
            self._lows.append(lo)

    def nth(self, n):
        _check_index(n)
        cum = self._cum
        while cum[-1] < n:
            self._extend(len(cum))
        j = bisect.bisect_left(cum, n)
        return self._lows[j] + (n - cum[j - 1] - 1)

    def upto(self, v):
        out = []
        j = 1
        while True:
            self._extend(j)
            lo = self._lows[j]
            if lo > v:
                return out
            out.extend(range(lo, min(lo + self._cum[j] - self._cum[j - 1], v + 1)))
            j += 1

    def _owner(self, v):
        """Index n with a(n) <= v < a(n+1), or 0."""
        return self.base.floor_index(v)

    def __contains__(self, k):
        n = self._owner(k)
        return n >= 1 and n in self.index

    def next_geq(self, v):
        n = self._owner(v)
        if n >= 1 and n in self.index:
            j = self.index.count_below(n) + 1
            self._extend(j)
            return self._cum[j - 1] + (v - self.base.nth(n)) + 1, v
        j, m = self.index.next_geq(n + 1)
        self._extend(j)
        return self._cum[j - 1] + 1, self.base.nth(m)

    def next_nonmember(self, v):
        while True:
            n = self._owner(v)
            if n >= 1 and n in self.index:
                v = self.base.nth(n + 1)
            else:
                return v

    def min_missing(self):
        return self.next_nonmember(1)


class Tilde(Lazy):
    """Iterates y starting from y(min y^c)."""

    def __init__(self, y: IncSeq, start: int):
        super().__init__()
        self.y = y
        self.start = start

    @property
    def spec(self):
        return f"tilde({self.y.spec})"

    def _generate(self):
        ynth = self.y.nth
        v = ynth(self.start)
        while True:
            yield v
            v = ynth(v)

    def _arith_from(self):
        """(index, value, step) past which the iterates form an arithmetic
        progression, when y has a translation tail y(m) = m + c."""
        if hasattr(self, "_arith"):
            return self._arith
        self._arith = None
        tail = self.y.affine_tail()
        if tail is not None and tail[1] == 1 and tail[2] > 0:
            m0, _, step = tail
            i, v = 1, self.y.nth(self.start)
            while v < m0:
                v = self.y.nth(v)
                i += 1
            self._arith = (i, v, step)
        return self._arith

    def nth(self, n):
        ar = self._arith_from()
        if ar is not None and n >= ar[0]:
            _check_index(n)
            return ar[1] + (n - ar[0]) * ar[2]
        return super().nth(n)

    def next_geq(self, v):
        ar = self._arith_from()
        if ar is not None and v > ar[1]:
            i = ar[0] + -(-(v - ar[1]) // ar[2])
            return i, self.nth(i)
        return super().next_geq(v)

    def affine_tail(self):
        ar = self._arith_from()
        if ar is None:
            return None
        return ar[0], ar[2], ar[1] - ar[0] * ar[2]

    def prefix(self, n):
        return [self.nth(i) for i in range(1, n + 1)]

    def upto(self, v):
        if self._arith_from() is None:
            return super().upto(v)
        return IncSeq.upto(self, v)

    def min_missing(self):
        return 1 if self.nth(1) > 1 else self.next_nonmember(1)


class Quotient(Lazy):
    """x/a = {n : x meets [a(n), a(n+1))}."""

    def __init__(self, x: IncSeq, a: IncSeq):
        super().__init__()
        self.x = x
        self.a = a

    @property
    def spec(self):
        return f"quot({self.x.spec}, {self.a.spec})"

    def least_geq(self, v):
        if self._cache and self._cache[-1] >= v:
            return super().least_geq(v)
        w = self.x.least_geq(self.a.nth(max(v, 1)))
        return self.a.floor_index(w)

    def _generate(self):
        a, x = self.a, self.x
        _, v = x.next_geq(a.nth(1))
        while True:
            n = a.floor_index(v)
            yield n
            _, v = x.next_geq(a.nth(n + 1))


# ---------------------------------------------------------------- points


@dataclass(frozen=True)
class FiniteSet:
    elements: tuple[int, ...] = ()

    def __post_init__(self):
        els = tuple(sorted(set(int(e) for e in self.elements)))
        if els and els[0] < 1:
            raise ValueError("finite sets live in N = {1,2,...}")
        object.__setattr__(self, "elements", els)

    def __contains__(self, k):
        i = bisect.bisect_left(self.elements, k)
        return i < len(self.elements) and self.elements[i] == k

    def upto(self, v):
        return list(self.elements[: bisect.bisect_right(self.elements, v)])

    def next_geq(self, v):
        i = bisect.bisect_left(self.elements, v)
        if i == len(self.elements):
            return None
        return i + 1, self.elements[i]

    def __len__(self):
        return len(self.elements)

    @property
    def spec(self):
        return "{" + ",".join(map(str, self.elements)) + "}"


Point = Union[FiniteSet, IncSeq]


def point_next_geq(x: Point, v: int) -> int | None:
    """Least element of x that is >= v, or None."""
    if isinstance(x, FiniteSet):
        r = x.next_geq(v)
        return None if r is None else r[1]
    try:
        return x.next_geq(v)[1]
    except DescriptorExhausted:
        return None


def point_upto(x: Point, v: int) -> list[int]:
    return x.upto(v)


def point_spec(x: Point) -> str:
    return x.spec


def trace_mask(x: Point, depth: int) -> int:
    """Bitmask of x ∩ [1, depth]; bit i-1 stands for i."""
    m = 0
    for e in x.upto(depth):
        m |= 1 << (e - 1)
    return m


def dist(a: Point, b: Point, depth: int = SCAN_LIMIT) -> Fraction:
    """1 / min(a Δ b), searched up to `depth`."""
    v = 1
    while v <= depth:
        na, nb = point_next_geq(a, v), point_next_geq(b, v)
        if na != nb:
            if na is None or nb is None:
                return Fraction(1, na if nb is None else nb)
            return Fraction(1, min(na, nb))
        if na is None:
            break
        v = na + 1
    raise IndistinguishableUpToHorizon("points agree up to the depth bound")


# ---------------------------------------------------------------- intervals

BRACKETS = {
    "open": (False, False),
    "closed": (True, True),
    "closed_open": (True, False),
    "open_closed": (False, True),
}


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: int
    lo_closed: bool
    hi_closed: bool

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("interval needs lo < hi")

    @property
    def first(self) -> int:
        return self.lo if self.lo_closed else self.lo + 1

    @property
    def last(self) -> int:
        return self.hi if self.hi_closed else self.hi - 1

    def elements(self) -> range:
        return range(self.first, self.last + 1)

    def __len__(self):
        return max(0, self.last - self.first + 1)

    def __contains__(self, k):
        return self.first <= k <= self.last


def interval(a: IncSeq, n: int, kind: str = "open") -> Interval:
    lo_c, hi_c = BRACKETS[kind]
    return Interval(a.nth(n), a.nth(n + 1), lo_c, hi_c)


def omits(x: Point, I: Interval) -> bool:
    if I.last < I.first:
        return True
    v = point_next_geq(x, I.first)
    return v is None or v > I.last


def omitted_indices(x: Point, a: IncSeq, kind: str, horizon: int) -> list[int]:
    return [n for n in range(1, horizon + 1) if omits(x, interval(a, n, kind))]


def count_in(x: Point, lo: int, hi: int) -> int:
    """|x ∩ [lo, hi]|."""
    if hi < lo:
        return 0
    if isinstance(x, FiniteSet):
        return len(x.upto(hi)) - len(x.upto(lo - 1))
    return x.count_below(hi + 1) - x.count_below(lo)


# ---------------------------------------------------------------- tilde


def tilde(y: IncSeq) -> IncSeq:
    k = y.min_missing()
    if k is None:
        return y
    return Tilde(y, k)


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class Verdict:
    outcome: str  # "holds" | "fails" | "unknown"
    horizon: int
    witnesses: tuple[int, ...] = ()
    index: int | None = None
    detail: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.outcome not in ("holds", "fails", "unknown"):
            raise ValueError(self.outcome)
        w = tuple(self.witnesses)
        if list(w) != sorted(w) or (w and w[-1] > self.horizon):
            raise ValueError("witnesses must be sorted and within the horizon")
        if self.index is not None and self.index > self.horizon:
            raise ValueError("failure index beyond horizon")
        object.__setattr__(self, "witnesses", w)

    @property
    def holds(self) -> bool:
        return self.outcome == "holds"

    @property
    def fails(self) -> bool:
        return self.outcome == "fails"

    def to_json(self) -> dict:
        out = {"outcome": self.outcome, "horizon": self.horizon,
               "witnesses": list(self.witnesses)}
        if self.index is not None:
            out["index"] = self.index
        if self.detail:
            out["detail"] = self.detail
        return out


def holds(horizon, witnesses=(), **detail) -> Verdict:
    return Verdict("holds", horizon, tuple(witnesses), None, detail)


def fails_at(horizon, index, **detail) -> Verdict:
    return Verdict("fails", horizon, (), index, detail)


def unknown(horizon, **detail) -> Verdict:
    return Verdict("unknown", horizon, (), None, detail)


RELATIONS = ("le", "le_star", "le_inf", "sqe", "subs")
_REL_ALIASES = {"≤": "le", "<=": "le", "≤*": "le_star", "<=*": "le_star",
                "≤∞": "le_inf", "<=inf": "le_inf", "⊑": "sqe", "⊆*": "subs"}


def _tail_clean(last_bad: int, horizon: int) -> bool:
    # a clean tail covering the upper half of the window certifies "almost all"
    return last_bad <= horizon // 2


def two_point_ok(a: IncSeq, b: IncSeq, n: int) -> bool:
    """|a ∩ [b(n), b(n+1)]| >= 2."""
    return count_in(a, b.nth(n), b.nth(n + 1)) >= 2


def containment_ok(a: IncSeq, b: IncSeq, n: int) -> bool:
    """Some closed a-interval lies inside the closed b-interval n."""
    lo, hi = b.nth(n), b.nth(n + 1)
    i, v = a.next_geq(lo)
    return a.nth(i + 1) <= hi


def relate(rel: str, a: IncSeq, b: IncSeq, horizon: int) -> Verdict:
    rel = _REL_ALIASES.get(rel, rel)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if rel == "le":
        for n in range(1, horizon + 1):
            if a.nth(n) > b.nth(n):
                return fails_at(horizon, n)
        return holds(horizon, range(1, horizon + 1))
    if rel in ("le_star", "le_inf"):
        good, last_bad = [], 0
        for n in range(1, horizon + 1):
            if a.nth(n) <= b.nth(n):
                good.append(n)
            else:
                last_bad = n
        if rel == "le_inf":
            return holds(horizon, good) if good else unknown(horizon)
        if _tail_clean(last_bad, horizon):
            return holds(horizon, [n for n in good if n > last_bad], crossing=last_bad)
        return unknown(horizon, last_violation=last_bad)
    if rel == "sqe":
        good, last_bad = [], 0
        for n in range(1, horizon + 1):
            if two_point_ok(a, b, n):
                good.append(n)
            else:
                last_bad = n
        if _tail_clean(last_bad, horizon):
            return holds(horizon, [n for n in good if n > last_bad], crossing=last_bad)
        return unknown(horizon, last_violation=last_bad)
    if rel == "subs":
        extra = [n for n in range(1, horizon + 1) if a.nth(n) not in b]
        elements = [a.nth(n) for n in extra]
        late = [n for n in extra if n > horizon // 2]
        if late:
            return fails_at(horizon, late[0], elements=elements)
        bad = set(extra)
        return holds(horizon, [n for n in range(1, horizon + 1) if n not in bad],
                     elements=elements, crossing=max(elements, default=0))
    raise ValueError(f"unknown relation {rel!r}")


def quotient(x: Point, a: IncSeq, horizon: int) -> list[int]:
    """Indices n <= horizon with x ∩ [a(n), a(n+1)) nonempty."""
    out = []
    for n in range(1, horizon + 1):
        lo, hi = a.nth(n), a.nth(n + 1)
        v = point_next_geq(x, lo)
        if v is not None and v < hi:
            out.append(n)
    return out


def omit0_check(x: IncSeq, y: IncSeq, horizon: int) -> Verdict:
    """Check y(ty(n)) <= x(ty(n)) at every omitted open tilde-y interval."""
    k = x.min_missing()
    if k is None:
        raise XEqualsN(f"{x.spec} is all of N")
    ty = tilde(y)
    checked = []
    for n in range(k, horizon + 1):
        lo, hi = ty.nth(n), ty.nth(n + 1)
        if omits(x, Interval(lo, hi, False, False)):
            if y.nth(lo) > x.nth(lo):
                return fails_at(horizon, n)
            checked.append(n)
    return holds(horizon, checked, min_missing=k)


def _check_index(n):
    if n < 1:
        raise ValueError("indices start at 1")


# ---------------------------------------------------------------- DSL

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


@dataclass
class Call:
    name: str
    sections: list  # list of lists of positional args
    keywords: dict


def _tokenize(text):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1):
            toks.append(("int", int(m.group(1)), m.start(1)))
        elif m.group(2):
            toks.append(("name", m.group(2), m.start(2)))
        elif m.group(3):
            toks.append(("sym", m.group(3), m.start(3)))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", None, len(self.text))

    def take(self, kind=None, value=None):
        t = self.peek()
        if (kind and t[0] != kind) or (value is not None and t[1] != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r} at column {t[2] + 1} in {self.text!r}")
        self.i += 1
        return t

    def item(self):
        t = self.peek()
        if t[0] == "int":
            self.take()
            if self.peek()[:2] == ("sym", "."):
                parts = [t[1]]
                while self.peek()[:2] == ("sym", "."):
                    self.take()
                    parts.append(self.take("int")[1])
                return tuple(parts)
            return t[1]
        if t[0] == "name":
            self.take()
            if self.peek()[:2] == ("sym", "("):
                return self.call(t[1])
            return t[1]
        if t[:2] == ("sym", "{"):
            self.take()
            els = []
            while self.peek()[:2] != ("sym", "}"):
                els.append(self.take("int")[1])
                if self.peek()[:2] == ("sym", ","):
                    self.take()
            self.take("sym", "}")
            return FiniteSet(tuple(els))
        raise ParseError(f"unexpected {t[1]!r} at column {t[2] + 1} in {self.text!r}")

    def call(self, name):
        self.take("sym", "(")
        sections, kw = [[]], {}
        while self.peek()[:2] != ("sym", ")"):
            t = self.peek()
            if t[:2] == ("sym", ";"):
                self.take()
                sections.append([])
                continue
            if t[:2] == ("sym", ","):
                self.take()
                continue
            if t[0] in ("name", "int") and self.i + 1 < len(self.toks) \
                    and self.toks[self.i + 1][:2] == ("sym", "="):
                self.take()
                self.take("sym", "=")
                kw[str(t[1])] = self.item()
                continue
            sections[-1].append(self.item())
        self.take("sym", ")")
        return Call(name, sections, kw)


_BUILDERS: dict[str, Callable[[Call], object]] = {}


def register_form(name: str):
    def deco(fn):
        _BUILDERS[name] = fn
        return fn
    return deco


def _int(v, what="argument"):
    if not isinstance(v, int) or v < 1:
        raise ParseError(f"{what} must be a positive integer, got {v!r}")
    return v


def build(node) -> object:
    if isinstance(node, Call):
        fn = _BUILDERS.get(node.name)
        if fn is None:
            _load_extensions()
            fn = _BUILDERS.get(node.name)
        if fn is None:
            raise ParseError(f"unknown form {node.name!r}")
        try:
            return fn(node)
        except ParseError:
            raise
        except (ValueError, TypeError, IndexError) as exc:
            raise ParseError(f"bad arguments to {node.name}: {exc}") from exc
    if node == "id":
        return Identity()
    if isinstance(node, FiniteSet):
        return node
    return node


def _seq(node) -> IncSeq:
    s = build(node)
    if not isinstance(s, IncSeq):
        raise ParseError(f"expected a sequence, got {node!r}")
    return s


def _load_extensions():
    from . import construct, hitting  # noqa: F401  (register their forms)


@register_form("arith")
def _b_arith(c):
    s, d = c.sections[0]
    return Arith(_int(s), _int(d))


@register_form("pow")
def _b_pow(c):
    (b,) = c.sections[0]
    return Pow(_int(b))


@register_form("list")
def _b_list(c):
    head = [_int(v) for v in c.sections[0]]
    tail = None
    if len(c.sections) > 1 and c.sections[1]:
        tail = _seq(c.sections[1][0])
        if not isinstance(tail, Arith):
            raise ParseError("list tail must be arith(s,d)")
    return Listed(head, tail)


@register_form("compl")
def _b_compl(c):
    base = _seq(c.sections[0][0])
    if "cert" not in c.keywords:
        raise ParseError("compl needs cert=seq")
    return Complement(base, _seq(c.keywords["cert"]))


@register_form("iunion")
def _b_iunion(c):
    idx, base = c.sections[0]
    return IntervalUnion(_seq(idx), _seq(base))


@register_form("tilde")
def _b_tilde(c):
    return tilde(_seq(c.sections[0][0]))


@register_form("quot")
def _b_quot(c):
    x, a = c.sections[0]
    return Quotient(_seq(x), _seq(a))


def parse(text: str):
    """Parse a sequence spec (or a finite set written {a,b,...})."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty spec")
    p = _Parser(text)
    node = p.item()
    if p.peek()[0] != "end":
        t = p.peek()
        raise ParseError(f"trailing input at column {t[2] + 1} in {text!r}")
    return build(node)


def parse_seq(text: str) -> IncSeq:
    s = parse(text)
    if not isinstance(s, IncSeq):
        raise ParseError(f"{text!r} is not an infinite sequence")
    return s


def parse_point(obj) -> Point:
    """A point from a spec string or a JSON list of naturals."""
    if isinstance(obj, (list, tuple)):
        return FiniteSet(tuple(obj))
    return parse(obj)
