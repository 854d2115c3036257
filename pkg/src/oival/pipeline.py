"""Shared plumbing for the command line and the suites: loading plans and
covers, running selection demos and constructions, deterministic JSON."""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources
from pathlib import Path

from .construct import build_prefix
from .covers import cover_from_json, gm_extract
from .hitting import PLANS, build_refined, verify_refined
from .seqcore import FiniteSet, OivalError, ParseError, parse_seq, point_spec
from .select import (
    Sample, bs_bound_ok, bs_select, chain_thresholds, cover_sequence, crown_run,
    jordan_diagonal, menger_two_pass, tower_select, uid_select, utgg_select, verify,
)

PROCEDURES = ("two-pass", "bs", "uid", "utgg", "tower", "jordan", "crown")
GAMMA_PROCEDURES = PROCEDURES[1:]


class UnknownProcedure(OivalError):
    pass


# ---------------------------------------------------------------- JSON I/O


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(obj, path: str | Path | None) -> str:
    text = dumps(obj)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def digest(obj) -> str:
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def parse_json_text(text: str, where: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{where}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def load_json(path: str | Path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"{p}: cannot read ({e.strerror})") from None
    return parse_json_text(text, str(p))


def fixtures_dir() -> Path:
    env = os.environ.get("OIVAL_FIXTURES")
    if env:
        return Path(env)
    return Path(str(resources.files("oival") / "fixtures"))


def load_fixture(name: str):
    return load_json(fixtures_dir() / name)


# ---------------------------------------------------------------- plans


def _field(obj: dict, key: str, where: str, kind, default=None, required=True):
    if key not in obj:
        if required and default is None:
            raise ParseError(f"{where}.{key}: missing")
        return default
    v = obj[key]
    ok = isinstance(v, kind) and not (kind is int and isinstance(v, bool))
    if not ok:
        raise ParseError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return v


def _specs(obj, key, where):
    raw = _field(obj, key, where, list)
    out = []
    for i, s in enumerate(raw):
        if not isinstance(s, str):
            raise ParseError(f"{where}.{key}[{i}]: expected a sequence spec string")
        try:
            out.append(parse_seq(s))
        except ParseError as e:
            raise ParseError(f"{where}.{key}[{i}]: {e}") from None
    return out


def prefix_from_plan(plan: dict, where: str = "plan"):
    if not isinstance(plan, dict):
        raise ParseError(f"{where}: expected an object")
    kind = _field(plan, "kind", where, str)
    if kind not in ("le_star", "sqe", "tower", "unbounded"):
        raise ParseError(f"{where}.kind: unknown kind {kind!r}")
    oracle = _specs(plan, "oracle", where)
    if not oracle:
        raise ParseError(f"{where}.oracle: empty")
    steps = _field(plan, "steps", where, int)
    horizon = _field(plan, "horizon", where, int, default=1000)
    rounds = _field(plan, "rounds", where, int, default=3)
    base = _specs(plan, "base", where) if "base" in plan else []
    return build_prefix(kind, oracle, steps, horizon, rounds, base)


def sample_from_plan(plan: dict, where: str = "sample"):
    ordered = prefix_from_plan(plan, where)
    fin_raw = _field(plan, "fin", where, list, default=[], required=False)
    fin = []
    for i, els in enumerate(fin_raw):
        if not isinstance(els, list) or not all(isinstance(e, int) and e >= 1 for e in els):
            raise ParseError(f"{where}.fin[{i}]: expected a list of positive integers")
        fin.append(FiniteSet(tuple(els)))
    split = plan.get("split")
    if split is not None and (not isinstance(split, int) or not 0 <= split <= len(ordered)):
        raise ParseError(f"{where}.split: expected an index in [0, {len(ordered)}]")
    return Sample(fin, ordered, split)


def covers_from_obj(obj, where: str = "covers"):
    entries = obj.get("covers") if isinstance(obj, dict) else obj
    if not isinstance(entries, list) or not entries:
        raise ParseError(f"{where}.covers: expected a non-empty list")
    out = []
    for i, e in enumerate(entries):
        out.extend(cover_from_json(e, f"{where}.covers[{i}]"))
    return out


# ---------------------------------------------------------------- demos


def _jordan(sample: Sample, seq, depth: int):
    """Nested chain of growing sample parts; family n is a Galvin-Miller run
    whose members all contain chain element min(n, K)."""
    members = sample.ordered.members
    K = len(seq)
    cut = [round(len(members) * k / K) for k in range(1, K + 1)]
    chain = [list(sample.fin_part) + list(members[:c]) for c in cut]
    families, labels = [], []
    for n, cover in enumerate(seq, 1):
        gm = gm_extract(cover, 0, depth, points=chain[n - 1])
        families.append([cover.member(m) for m in gm.members])
        labels.append(gm.members)
    sel = jordan_diagonal(chain, families, labels)
    sel.thresholds = chain_thresholds(chain, sample.points)
    sel.trace["chain"] = [[point_spec(x) for x in X] for X in chain]
    return sel


def _select(procedure, sample, covers, rounds, horizon):
    if procedure == "two-pass":
        return menger_two_pass(covers, sample)
    if procedure == "bs":
        return bs_select(covers, sample, rounds, horizon)
    if procedure == "uid":
        return uid_select(covers, sample, rounds, horizon)
    if procedure == "utgg":
        return utgg_select(covers, sample, rounds, horizon)
    if procedure == "tower":
        return tower_select(covers, sample, rounds, horizon)
    if procedure == "jordan":
        return _jordan(sample, cover_sequence(covers, rounds), 3 * rounds + 6)
    if procedure == "crown":
        return crown_run(sample, covers, rounds, horizon)
    raise UnknownProcedure(f"unknown procedure {procedure!r}; choose from {', '.join(PROCEDURES)}")


def cover_report(sel, seq, points) -> dict:
    """Each point lies in some selected member of some cover."""
    uncovered = [i for i, x in enumerate(points)
                 if not any(seq[n].member(m).contains(x)
                            for n, g in enumerate(sel.groups) for m in g)]
    return {"uncovered": uncovered, "ok": not uncovered}


def cardinality_ok(procedure: str, sel) -> bool:
    if procedure == "bs":
        return bs_bound_ok(sel)
    if procedure == "uid":
        return all(len(set(g)) <= n + 1 for n, g in enumerate(sel.groups, 1))
    if procedure == "utgg":
        return all(len(g) == 2 for g in sel.groups)
    if procedure in ("tower", "jordan", "crown"):
        return all(len(g) == 1 for g in sel.groups)
    return True


def run_demo(procedure: str, sample_plan: dict, covers_obj, rounds: int | None = None,
             horizon: int = 1000, seed: int = 0) -> dict:
    if procedure not in PROCEDURES:
        raise UnknownProcedure(f"unknown procedure {procedure!r}; choose from {', '.join(PROCEDURES)}")
    sample = sample_from_plan(sample_plan)
    covers = covers_from_obj(covers_obj)
    if procedure == "two-pass":
        seq = covers if rounds is None else cover_sequence(covers, rounds)
    else:
        seq = cover_sequence(covers, rounds)
    inputs = {"procedure": procedure, "sample": sample_plan, "covers": covers_obj,
              "rounds": rounds, "horizon": horizon, "seed": seed}
    sel = _select(procedure, sample, seq, len(seq), horizon)
    if procedure == "two-pass":
        report = cover_report(sel, seq, sample.points)
    else:
        report = verify(sel, seq, sample.points)
    card = cardinality_ok(procedure, sel)
    if not (report["ok"] and card):
        verdict = "failed"
    elif procedure in GAMMA_PROCEDURES:
        verdict = "gamma-certified"
    else:
        verdict = "cover-certified"
    return {
        "inputs": inputs,
        "inputs_digest": digest(inputs),
        "points": [{"label": lab, "spec": point_spec(x)}
                   for lab, x in zip(sample.labels(), sample.points)],
        "selection": sel.to_json(),
        "report": report,
        "cardinality_ok": card,
        "verdict": verdict,
    }


# ---------------------------------------------------------------- constructions


def plan_oracle(plan: dict):
    return _specs(plan, "oracle", "plan")


def le_inf_witnesses(y, s, horizon: int, want: int) -> list[int]:
    """The first `want` indices n <= horizon with y(n) <= s(n)."""
    out = []
    for n in range(1, horizon + 1):
        if y.nth(n) <= s.nth(n):
            out.append(n)
            if len(out) == want:
                break
    return out


def unbounded_certificates(prefix, oracle, horizon: int, want: int = 10) -> list[dict]:
    """Member i must satisfy y <=inf s_i for the oracle members it was built against."""
    out = []
    for i, s in enumerate(prefix.members):
        seen = {}
        for j in range(i + 1):
            y = oracle[j % len(oracle)]
            seen.setdefault(y.spec, y)
        for y in seen.values():
            w = le_inf_witnesses(y, s, horizon, want)
            out.append({"i": i + 1, "relation": "le_inf", "oracle": y.spec, "witnesses": w,
                        "outcome": "holds" if len(w) == want else "unknown"})
    return out


def run_construct(plan: dict, horizon: int | None = None, rounds: int | None = None) -> dict:
    if not isinstance(plan, dict):
        raise ParseError("plan: expected an object")
    inputs = {"plan": plan, "horizon": horizon, "rounds": rounds}
    refined = "embed" in plan or "plan" in plan
    if refined:
        name = _field(plan, "plan", "plan", str)
        if name not in PLANS:
            raise ParseError(f"plan.plan: unknown plan {name!r}; choose from {', '.join(PLANS)}")
        base = _field(plan, "base", "plan", dict)
        oracle = _specs(base, "oracle", "plan.base")
        steps = _field(plan, "steps", "plan", int, default=base.get("steps"))
        H = horizon or _field(plan, "horizon", "plan", int, default=200)
        ref = build_refined(name, oracle, steps, H, partition=plan.get("partition"),
                            width=plan.get("width"), embed=plan.get("embed"))
        check = verify_refined(ref, min(H, 200))
        out = {"prefix": ref.to_json(H), "checks": check, "ok": check["ok"]}
    else:
        if horizon is not None:
            plan = dict(plan, horizon=horizon)
        if rounds is not None:
            plan = dict(plan, rounds=rounds)
        prefix = prefix_from_plan(plan)
        H = plan.get("horizon", 1000)
        certs = prefix.certify(min(H, 400))
        if prefix.kind == "unbounded":
            certs = unbounded_certificates(prefix, plan_oracle(plan), min(H, 400))
        out = {"prefix": {"kind": prefix.kind, "members": [s.spec for s in prefix.members],
                          "witnesses": prefix.witnesses},
               "certificates": certs,
               "ok": all(c["outcome"] == "holds" for c in certs)}
    out["inputs"] = inputs
    out["inputs_digest"] = digest(inputs)
    return out
