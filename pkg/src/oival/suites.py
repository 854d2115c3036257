"""Seeded property suites with exact integer checks.

Every suite returns a report dict with `passed`, per-suite counters and
`counterexamples` (inputs as seq-specs).  Timing is kept apart so that the
rest of the report is reproducible."""

from __future__ import annotations

import itertools
import random
import time

import numpy as np

from .construct import interval_union_dominator, split_by_g
from .covers import (
    ClopenSet,
    cantor_defeater, column_cover, gm_extract, om_cover, reclaw_map,
    refine_disjoint,
)
from .hitting import (
    BlockSelector, build_refined, default_partition, defeat_gamma_selection,
    greedy_selection, guard_check, kun_check, kun_embed, perturbation_guard,
    sparse_embed, window_counts, NoDefeaterInSample,
)
from .seqcore import (
    Arith, FiniteSet, Interval, Listed, OivalError, omit0_check, omits, point_spec,
    tilde,
)
from . import pipeline


class UnknownSuite(OivalError):
    pass


# ---------------------------------------------------------------- generators


def random_seq(rng: random.Random, max_head=4, head_top=40, start_top=60, step_top=6,
               identity_rate=0.0) -> Listed:
    """Eventually arithmetic sequence: a short explicit head, then arith(start, step)."""
    if identity_rate and rng.random() < identity_rate:
        return Listed((), Arith(1, 1))
    head = sorted(rng.sample(range(1, head_top), rng.randint(0, max_head)))
    return Listed(head, Arith(rng.randint(1, start_top), rng.randint(1, step_top)))


def random_proper(rng: random.Random, **kw) -> Listed:
    while True:
        x = random_seq(rng, **kw)
        if x.min_missing() is not None:
            return x


def _values(y: Listed, lo: int, hi: int) -> np.ndarray:
    """y(lo..hi) as int64 via the affine tail."""
    m0, d, c = y.affine_tail()
    n = np.arange(lo, hi + 1, dtype=np.int64)
    v = d * n + c
    for i in range(lo, min(m0, hi + 1)):
        v[i - lo] = y.nth(i)
    return v


# ---------------------------------------------------------------- 1: tilde


def _tilde_case(y: Listed, h: int) -> str | None:
    """None when tilde(y) is strictly increasing with y <= tilde(y) on [1, h]."""
    k = y.min_missing()
    ty = tilde(y)
    if k is None:
        return None if ty is y else "identity input not returned unchanged"
    m0, d, c = y.affine_tail()
    cap = max(1 << 64, y.nth(h) + 1)
    v, prev, n = y.nth(k), 0, 1
    while n <= h:
        if v <= prev:
            return f"not increasing at {n}"
        if y.nth(n) > v:
            return f"y({n}) > tilde(y)({n})"
        if n <= 64 and ty.nth(n) != v:
            return f"library value differs at {n}"
        if d == 1 and v >= m0:
            # translation regime: the remaining iterates are v + j*c
            if c <= 0:
                return f"stalls at {n}"
            rest = v + c * np.arange(0, h - n + 1, dtype=np.int64)
            if (_values(y, n, h) > rest).any():
                return "y exceeds tilde(y) in the translation regime"
            if ty.nth(h) != int(rest[-1]):
                return f"library value differs at {h}"
            return None
        if v >= cap and v >= m0:
            # past the cap every later iterate exceeds y(h), and
            # w -> d*w + c is increasing above the cap
            return None if (d - 1) * cap + c > 0 else "affine step not increasing above the cap"
        prev, v, n = v, y.nth(v), n + 1
    return None


def suite_tilde(seed: int = 1, horizon: int = 10_000, cases: int = 1000) -> dict:
    rng = random.Random(seed)
    bad = []
    for _ in range(cases):
        y = random_seq(rng, identity_rate=0.02)
        why = _tilde_case(y, horizon)
        if why:
            bad.append({"y": y.spec, "reason": why})
    return {"cases": cases, "horizon": horizon, "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 2: omit0


def _iterates(y: Listed, count: int, stop):
    """tilde(y)(1..) until `count` values or stop(value, next) is true."""
    v = y.nth(y.min_missing())
    out = [v]
    while len(out) < count:
        w = y.nth(v)
        out.append(w)
        if stop(v, w):
            break
        v = w
    return out


def _omit0_case(x: Listed, y: Listed, h: int) -> tuple[str | None, int]:
    """Check y(lo) <= x(lo) for every omitted open interval (lo, hi) between
    consecutive tilde-y iterates with index in [min x^c, h].  Returns
    (failure, number of omitted intervals checked)."""
    k = x.min_missing()
    xm0, dx, cx = x.affine_tail()
    x_tail_from = x.nth(xm0)
    ym0, dy, cy = y.affine_tail()
    if y.min_missing() is None:
        return None, 0

    def settled(lo, hi):
        # x is arithmetic from lo on and the gap already admits an x point;
        # gaps never shrink once iterates pass y's head
        return lo >= max(x_tail_from, ym0) and hi - lo - 1 >= dx

    def stop(lo, hi):
        return settled(lo, hi) or (dy == 1 and lo >= max(x_tail_from, ym0))

    ty = _iterates(y, h + 1, stop)
    checked = 0
    for n in range(k, min(h, len(ty) - 1) + 1):
        lo, hi = ty[n - 1], ty[n]
        if settled(lo, hi):
            break
        if dy == 1 and lo >= max(x_tail_from, ym0):
            # translation regime: iterates lo + j*cy, vectorised
            j = np.arange(0, h - n + 1, dtype=np.int64)
            los = lo + cy * j
            first = -(-(los + 1 - cx) // dx)
            nxt = dx * first + cx
            hit = nxt < los + cy
            om = ~hit
            checked += int(om.sum())
            yv = dy * los + cy
            xv = dx * los + cx
            if (om & (yv > xv)).any():
                return f"inequality fails at index {n + int(np.argmax(om & (yv > xv)))}", checked
            return None, checked
        if omits(x, Interval(lo, hi, False, False)):
            checked += 1
            if y.nth(lo) > x.nth(lo):
                return f"inequality fails at index {n}", checked
    return None, checked


def suite_omit0(seed: int = 2, horizon: int = 1000, cases: int = 1000, cross: int = 40) -> dict:
    rng = random.Random(seed)
    bad, checked, crossed = [], 0, 0
    for i in range(cases):
        x = random_proper(rng, step_top=8)
        y = random_seq(rng)
        why, c = _omit0_case(x, y, horizon)
        checked += c
        if why:
            bad.append({"x": x.spec, "y": y.spec, "reason": why})
        if i < cross and y.min_missing() is not None:
            # the library check agrees on a short horizon
            v = omit0_check(x, y, 30)
            crossed += 1
            if not v.holds:
                bad.append({"x": x.spec, "y": y.spec, "reason": "library check fails"})
    return {"cases": cases, "horizon": horizon, "omitted_checked": checked,
            "library_crosschecks": crossed, "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 3: splitter


def _first_witnesses(g, s, horizon, want):
    return pipeline.le_inf_witnesses(g, s, horizon, want)


def suite_splitter(seed: int = 3, horizon: int = 10_000, cases: int = 500, want: int = 50) -> dict:
    rng = random.Random(seed)
    bad = []
    fewest = None
    for _ in range(cases):
        g = random_seq(rng)
        sp = split_by_g(g)
        wa = _first_witnesses(g, sp.a, horizon, want)
        wc = _first_witnesses(g, sp.a_compl, horizon, want)
        fewest = min(len(wa), len(wc)) if fewest is None else min(fewest, len(wa), len(wc))
        A = sp.a.upto(horizon)
        C = sp.a_compl.upto(horizon)
        tiles = len(A) + len(C) == horizon and not set(A) & set(C)
        if len(wa) < want or len(wc) < want or not tiles:
            bad.append({"g": g.spec, "witnesses_a": len(wa), "witnesses_compl": len(wc),
                        "tiles": tiles})
    return {"cases": cases, "horizon": horizon, "min_witnesses": fewest,
            "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 4: dominator


def suite_dominator(seed: int = 4, horizon: int = 100_000, cases: int = 200, want: int = 25,
                    rounds: int = 4) -> dict:
    rng = random.Random(seed)
    bad = []
    worst = 0
    for _ in range(cases):
        Y = [random_seq(rng) for _ in range(rng.randint(1, 8))]
        a = random_seq(rng)
        dom = interval_union_dominator(Y, a, rounds)
        for y in Y:
            w = pipeline.le_inf_witnesses(y, dom.c, horizon, want)
            if len(w) < want:
                bad.append({"family": [z.spec for z in Y], "a": a.spec, "member": y.spec,
                            "witnesses": len(w)})
            else:
                worst = max(worst, w[-1])
    return {"cases": cases, "horizon": horizon, "largest_needed_index": worst,
            "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 5: Galvin-Miller


GM_SIZES = {0: 8, 1: 5, 2: 3, 3: 2}


def _members_mask(traces: np.ndarray, sets) -> np.ndarray:
    hit = np.zeros(traces.shape, dtype=bool)
    for U in sets:
        for care, value in U.cubes:
            hit |= (traces & care) == value
    return hit


def _open_mask(lo: int, hi: int) -> int:
    m = 0
    for e in range(lo + 1, hi):
        m |= 1 << (e - 1)
    return m


def gm_exhaustive(k: int, N: int, cover=None) -> dict:
    cover = cover or om_cover()
    res = gm_extract(cover, k, N)
    a = res.a
    depth = a[N]
    traces = np.arange(1 << depth, dtype=np.int64)
    failures, hyp_counts = [], []
    for n in range(1, N + 1):
        mask = _open_mask(a[n - 1], a[n])
        few = np.bitwise_count(traces & mask) <= k
        inside = _members_mask(traces, [cover.member(m) for m in res.groups[n - 1]])
        hyp_counts.append(int(few.sum()))
        bad = few & ~inside
        if bad.any():
            failures.append({"n": n, "trace": int(np.argmax(bad))})
    members = res.members
    return {"k": k, "N": N, "a": a, "depth": depth, "traces": 1 << depth,
            "hypothesis_counts": hyp_counts, "a1_is_1": res.base_a[0] == 1,
            "distinct": len(set(members)) == len(members), "failures": failures,
            "passed": not failures and res.base_a[0] == 1 and len(set(members)) == len(members)
            and depth <= 24}


def gm_symbolic(k: int, N: int, cover=None) -> dict:
    """Same guarantee at full size, decided by clopen algebra instead of
    enumeration: {x : |x ∩ (b(n), b(n+1))| <= k} must lie inside the group union."""
    cover = cover or om_cover()
    res = gm_extract(cover, k, N)
    b = res.a
    failures = []
    for n in range(1, N + 1):
        inner = list(range(b[n - 1] + 1, b[n]))
        care = _open_mask(b[n - 1], b[n])
        cubes = [(care, sum(1 << (e - 1) for e in chosen))
                 for r in range(min(k, len(inner)) + 1) for chosen in itertools.combinations(inner, r)]
        few = ClopenSet(b[n] - 1, cubes)
        union = ClopenSet.empty(0)
        for m in res.groups[n - 1]:
            union = union.union(cover.member(m))
        if not few.subset_of(union):
            failures.append({"n": n})
    members = res.members
    ok = not failures and res.base_a[0] == 1 and len(set(members)) == len(members)
    return {"k": k, "N": N, "b": b, "failures": failures, "passed": ok}


def suite_gm(seed: int = 5, horizon: int | None = None, sizes: dict | None = None) -> dict:
    runs = [gm_exhaustive(k, N) for k, N in sorted((sizes or GM_SIZES).items())]
    symbolic = [gm_symbolic(k, 8) for k in range(4)]
    bad = [{"k": r["k"], "N": r["N"], "failures": r["failures"]}
           for r in runs + symbolic if not r["passed"]]
    return {"runs": runs, "symbolic": symbolic, "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 6: selectors


def suite_selectors(seed: int = 6, horizon: int | None = None) -> dict:
    demos = pipeline.load_fixture("demos.json")["demos"]
    results, bad = [], []
    for d in demos:
        if d["procedure"] == "two-pass":
            continue
        tr = pipeline.run_demo(d["procedure"], pipeline.load_fixture(d["sample"]),
                               pipeline.load_fixture(d["covers"]), d["rounds"],
                               horizon or d["horizon"], seed)
        rep = tr["report"]
        entry = {"procedure": d["procedure"], "verdict": tr["verdict"],
                 "max_late_misses": rep["max_late_misses"], "cardinality_ok": tr["cardinality_ok"]}
        results.append(entry)
        if tr["verdict"] != "gamma-certified":
            bad.append(dict(entry, points=[p["spec"] for p, r in zip(tr["points"], rep["points"])
                                           if r["late_misses"] > rep["budget"]]))
    return {"runs": results, "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 7: hitting


def suite_hitting(seed: int = 7, horizon: int = 10_000, guard_cases: int = 200,
                  guard_bound: int = 200) -> dict:
    rng = random.Random(seed)
    bad = []
    kun_runs, sparse_runs = 0, 0
    for k in (1, 2, 3):
        for growth in ("linear", "doubling"):
            s = random_seq(rng, step_top=4)
            g = BlockSelector(default_partition(growth), f"const {k}", rng.choice(["first", "last"]))
            t, sp = kun_embed(k, g, s)
            chk = kun_check(k, s, t, sp, horizon)
            kun_runs += 1
            if not chk["pointwise"].holds or chk["counting_failures"]:
                bad.append({"check": "kun", "s": s.spec, "selector": g.spec})
        s = random_seq(rng, step_top=4)
        g = BlockSelector(default_partition("linear"), f"const {k}", rng.choice(["first", "last"]))
        _, sp = sparse_embed(s, k, g)
        worst = max(window_counts(s, sp, horizon))
        sparse_runs += 1
        if worst > k:
            bad.append({"check": "sparse", "s": s.spec, "selector": g.spec, "window": worst})
    a = Arith(2, 2)
    omitted_seen = 0
    guards = {}
    for _ in range(guard_cases):
        growth = rng.choice(["linear", "doubling"])
        width = rng.choice(["id", "const 1", "const 2"])
        g = BlockSelector(default_partition(growth), width, rng.choice(["first", "last"]))
        if g.spec not in guards:
            guards[g.spec] = guard_sequence(g, a, guard_bound)
        c = guards[g.spec]
        s = _random_guard_point(rng, c)
        found = guard_check(g, a, c, s, guard_bound)
        brute, seen = _guard_bruteforce(g, a, c, s, guard_bound)
        omitted_seen += seen
        if found or brute:
            bad.append({"check": "guard", "selector": g.spec, "s": point_spec(s),
                        "library": found, "brute": brute})
    return {"horizon": horizon, "kun_runs": kun_runs, "sparse_runs": sparse_runs,
            "guard": {"c": guards, "cases": guard_cases, "omitted_c_intervals": omitted_seen},
            "counterexamples": bad, "passed": not bad}


def guard_sequence(g, a, bound: int) -> list[int]:
    """c(1..) up to and including the first term above `bound`."""
    count = 2
    while True:
        c = perturbation_guard(g, a, count)
        if c[-1] > bound:
            return c
        count += 1


def _random_guard_point(rng: random.Random, c: list[int]) -> FiniteSet:
    """Random finite set below c(last) that skips each open c-interval with probability 1/2."""
    density = rng.choice([0.01, 0.05, 0.2])
    els = []
    for lo, hi in zip(c, c[1:]):
        if rng.random() < 0.5:
            continue
        els.extend(e for e in range(lo + 1, hi) if rng.random() < density)
    els.extend(e for e in c if rng.random() < 0.5)
    return FiniteSet(tuple(els))


def _guard_bruteforce(g, a, c, s: FiniteSet, bound: int) -> tuple[list[int], int]:
    """Plain set arithmetic: for every omitted (c(n), c(n+1)) with c(n) <= bound,
    some nonempty open a-interval inside it misses the perturbed set."""
    sset = set(s.elements)
    top = c[-1]
    pert = {m for n in s.elements if g.part.start(n) <= top for m in g(n)}
    avals = []
    i = 1
    while True:
        v = a.nth(i)
        if v > top:
            break
        avals.append(v)
        i += 1
    bad, seen = [], 0
    for n in range(1, len(c)):
        lo, hi = c[n - 1], c[n]
        if lo > bound:
            break
        if any(lo < e < hi for e in sset):
            continue
        seen += 1
        ok = any(lo <= p and q <= hi and q - p > 1 and not any(p < e < q for e in pert)
                 for p, q in zip(avals, avals[1:]))
        if not ok:
            bad.append(n)
    return bad, seen


# ---------------------------------------------------------------- 8: defeaters


DEFEATER_PLANS = ("u2nots1", "uidnotuk")
DEFEATER_ORACLE = ("arith(3,3)", "list(2,9; arith(20,4))", "arith(5,5)", "list(4; arith(7,3))")


def suite_defeaters(seed: int = 8, horizon: int | None = None, blocks: int = 300,
                    threshold: int = 20, cantor_n: int = 100) -> dict:
    from .seqcore import parse_seq
    rng = random.Random(seed)
    oracle = [parse_seq(s) for s in DEFEATER_ORACLE]
    fin = [FiniteSet(c) for r in range(3) for c in itertools.combinations(range(1, 5), r)]
    runs, bad = [], []
    for plan in DEFEATER_PLANS:
        ref = build_refined(plan, oracle, 6, 200)
        sample = list(fin) + list(ref.members)
        widths = sorted({g.width_name for g in ref.selectors})
        for width in widths:
            for highest in (False, True):
                sel = greedy_selection(ref.partition, fin, blocks, width, highest)
                entry = {"plan": plan, "width": width, "highest": highest}
                try:
                    out = defeat_gamma_selection(ref.partition, sample, sel, threshold)
                    entry.update(failures=len(out["failures"]), point=out["point_spec"],
                                 confirmed=out["confirmed"])
                    if not out["confirmed"]:
                        bad.append(entry)
                except NoDefeaterInSample as e:
                    entry.update(failures=0, error=str(e))
                    bad.append(entry)
                runs.append(entry)
    # diagonal defeater against one-per-n selections
    xs = [FiniteSet(tuple(sorted(rng.sample(range(1, 40), rng.randint(0, 6))))) for _ in range(60)]
    xs = list({x.spec: x for x in xs}.values())
    picks = [rng.randint(1, len(xs)) for _ in range(cantor_n)]
    cert = cantor_defeater(xs, picks)["certificate"]
    if not all(cert):
        bad.append({"check": "cantor", "failing_n": [n for n, ok in enumerate(cert, 1) if not ok]})
    return {"runs": runs, "cantor": {"n": cantor_n, "certified": sum(cert)},
            "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- 9: Recław map


RECLAW_COLUMNS = 4
RECLAW_COUNT = 14
RECLAW_REFINED = 12


def reclaw_covers():
    covers = [column_cover(n, RECLAW_COUNT) for n in range(1, RECLAW_COLUMNS + 1)]
    covers.append(refine_disjoint(om_cover(), RECLAW_REFINED))
    return covers


def _reclaw_point(rng: random.Random) -> FiniteSet:
    """A finite point whose first few elements stay inside the tabulated columns
    and which misses some m <= RECLAW_REFINED."""
    while True:
        head = sorted(rng.sample(range(1, RECLAW_COUNT + 1), RECLAW_COLUMNS))
        extra = [e for e in range(RECLAW_COUNT + 1, 40) if rng.random() < 0.3]
        x = FiniteSet(tuple(head + extra))
        if any(m not in x.elements for m in range(1, RECLAW_REFINED + 1)):
            return x


def suite_reclaw(seed: int = 9, horizon: int | None = None, cases: int = 500) -> dict:
    rng = random.Random(seed)
    covers = reclaw_covers()
    bad = []
    for _ in range(cases):
        x = _reclaw_point(rng)
        vx, mods = reclaw_map(covers, x)
        depth = max(mods)
        keep = [e for e in x.elements if e <= depth]
        above = [e for e in range(depth + 1, depth + 30) if rng.random() < 0.5]
        y = FiniteSet(tuple(keep + above))
        vy, _ = reclaw_map(covers, y)
        expected = list(x.elements[:RECLAW_COLUMNS]) + \
            [next(m for m in range(1, RECLAW_REFINED + 1) if m not in x.elements)]
        if vx != vy or vx != expected:
            bad.append({"x": point_spec(x), "y": point_spec(y), "fx": vx, "fy": vy})
    return {"cases": cases, "counterexamples": bad, "passed": not bad}


# ---------------------------------------------------------------- registry


SUITES = {
    "tilde": (suite_tilde, 5.0),
    "omit0": (suite_omit0, 5.0),
    "splitter": (suite_splitter, 10.0),
    "dominator": (suite_dominator, 30.0),
    "gm": (suite_gm, 60.0),
    "selectors": (suite_selectors, 60.0),
    "hitting": (suite_hitting, 30.0),
    "defeaters": (suite_defeaters, 10.0),
    "reclaw": (suite_reclaw, 5.0),
}


def run_suite(name: str, seed: int | None = None, horizon: int | None = None) -> dict:
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    fn, budget = SUITES[name]
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if horizon is not None:
        kwargs["horizon"] = horizon
    t0 = time.perf_counter()
    report = fn(**kwargs)
    elapsed = time.perf_counter() - t0
    report["suite"] = name
    return {"report": report, "elapsed": elapsed, "time_limit": budget}
