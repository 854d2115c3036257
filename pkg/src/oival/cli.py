"""Command line front end.

Exit codes: 0 pass, 1 invariant violation or failed procedure, 2 usage or
parse error."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline
from .seqcore import OivalError, ParseError, parse_seq, relate
from .suites import SUITES, UnknownSuite, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RELATIONS = ("le", "le_star", "le_inf", "sqe", "subs")


class UsageError(OivalError):
    pass


def _resolve(path: str) -> Path:
    """A path as given, else the same name inside the fixture directory."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    alt = pipeline.fixtures_dir() / path
    return alt if alt.exists() else p


def _check_config(args):
    seed = getattr(args, "seed", None)
    if seed is not None and not 0 <= seed < 1 << 64:
        raise UsageError("--seed must fit in 64 bits")
    horizon = getattr(args, "horizon", None)
    rounds = getattr(args, "rounds", None)
    if horizon is not None and horizon < 1:
        raise UsageError("--horizon must be positive")
    if rounds is not None and rounds < 1:
        raise UsageError("--rounds must be positive")
    if horizon is not None and rounds is not None and rounds > horizon:
        raise UsageError("--rounds may not exceed --horizon")


def _emit(obj, out: str | None, summary: str):
    text = pipeline.write_json(obj, out)
    if out is None:
        sys.stdout.write(text)
    else:
        print(summary)


# ---------------------------------------------------------------- commands


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise UnknownSuite(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}")
    reports = {}
    failed = False
    for name in names:
        res = run_suite(name, args.seed, args.horizon)
        rep = res["report"]
        slow = res["elapsed"] > res["time_limit"]
        ok = rep["passed"] and not slow
        failed |= not ok
        print(f"{name:10s} {'pass' if ok else 'FAIL'}  {res['elapsed']:.2f}s "
              f"(limit {res['time_limit']:.0f}s)", file=sys.stderr if args.out is None else sys.stdout)
        for cx in rep["counterexamples"][:20]:
            print(f"  counterexample: {pipeline.dumps(cx).strip()}", file=sys.stderr)
        reports[name] = dict(res, within_limit=not slow)
    if args.out is not None:
        pipeline.write_json(reports, args.out)
    return EXIT_FAIL if failed else EXIT_OK


def _demo_inputs(args, procedure):
    default = next((d for d in pipeline.load_fixture("demos.json")["demos"]
                    if d["procedure"] == procedure), None)
    sample_path = args.sample or (default and default["sample"])
    covers_path = args.covers or (default and default["covers"])
    if sample_path is None or covers_path is None:
        raise UsageError(f"procedure {procedure!r} needs --sample and --covers")
    sp, cp = _resolve(sample_path), _resolve(covers_path)
    sample, covers = pipeline.load_json(sp), pipeline.load_json(cp)
    # validate against the file names so errors point at the right input
    pipeline.covers_from_obj(covers, str(cp))
    pipeline.sample_from_plan(sample, str(sp))
    rounds = args.rounds if args.rounds is not None else (default["rounds"] if default else None)
    horizon = args.horizon if args.horizon is not None else (default["horizon"] if default else 1000)
    return sample, covers, rounds, horizon


def _one_demo(args, procedure):
    sample, covers, rounds, horizon = _demo_inputs(args, procedure)
    try:
        return pipeline.run_demo(procedure, sample, covers, rounds, horizon, args.seed or 0)
    except ParseError:
        raise
    except OivalError as e:
        raise OivalError(f"{procedure}: {type(e).__name__}: {e}") from e


def cmd_demo(args) -> int:
    if args.procedure == "all":
        if args.out is None:
            raise UsageError("--procedure all needs --out DIR")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        status = EXIT_OK
        for proc in pipeline.PROCEDURES:
            trace = _one_demo(args, proc)
            pipeline.write_json(trace, out / f"{proc}.json")
            print(f"{proc:9s} {trace['verdict']}")
            if trace["verdict"] == "failed":
                status = EXIT_FAIL
        return status
    trace = _one_demo(args, args.procedure)
    _emit(trace, args.out, f"{args.procedure}: {trace['verdict']}")
    return EXIT_FAIL if trace["verdict"] == "failed" else EXIT_OK


def cmd_replay(args) -> int:
    """Re-run a demo from the inputs embedded in its trace."""
    text = _resolve(args.trace).read_text(encoding="utf-8")
    old = pipeline.parse_json_text(text, args.trace)
    inp = old.get("inputs") if isinstance(old, dict) else None
    if not isinstance(inp, dict):
        raise ParseError(f"{args.trace}.inputs: missing")
    if pipeline.digest(inp) != old.get("inputs_digest"):
        print("inputs digest mismatch", file=sys.stderr)
        return EXIT_FAIL
    new = pipeline.run_demo(inp["procedure"], inp["sample"], inp["covers"], inp["rounds"],
                            inp["horizon"], inp["seed"])
    same = pipeline.dumps(new) == text
    print(f"{inp['procedure']}: {new['verdict']} ({'identical' if same else 'DIFFERS'})")
    return EXIT_OK if same else EXIT_FAIL


def cmd_construct(args) -> int:
    plan = pipeline.load_json(_resolve(args.plan))
    out = pipeline.run_construct(plan, args.horizon, args.rounds)
    _emit(out, args.out, f"construct: {'ok' if out['ok'] else 'FAILED'}")
    return EXIT_OK if out["ok"] else EXIT_FAIL


def cmd_rel(args) -> int:
    a, b = parse_seq(args.a), parse_seq(args.b)
    v = relate(args.rel, a, b, args.horizon)
    out = dict(v.to_json(), relation=args.rel, a=a.spec, b=b.spec)
    _emit(out, args.out, f"{args.rel}: {v.outcome}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oival", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, horizon=True, rounds=False):
        sp.add_argument("--seed", type=int, default=None)
        if horizon:
            sp.add_argument("--horizon", type=int, default=None)
        if rounds:
            sp.add_argument("--rounds", type=int, default=None)
        sp.add_argument("--out", default=None, help="output file (stdout if omitted)")

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("--suite", required=True, help=f"all, {', '.join(SUITES)}")
    common(v)
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo", help="run a selection procedure and its verifier")
    d.add_argument("--procedure", required=True, choices=pipeline.PROCEDURES + ("all",))
    d.add_argument("--sample", default=None, help="sample plan JSON")
    d.add_argument("--covers", default=None, help="covers JSON")
    common(d, rounds=True)
    d.set_defaults(func=cmd_demo)

    r = sub.add_parser("replay", help="re-run a demo trace from its embedded inputs")
    r.add_argument("trace")
    r.set_defaults(func=cmd_replay)

    c = sub.add_parser("construct", help="build a prefix from a build plan")
    c.add_argument("plan")
    common(c, rounds=True)
    c.set_defaults(func=cmd_construct)

    q = sub.add_parser("rel", help="decide a relation between two sequences up to a horizon")
    q.add_argument("rel", choices=RELATIONS)
    q.add_argument("a")
    q.add_argument("b")
    q.add_argument("horizon", type=int, nargs="?", default=100)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_rel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        _check_config(args)
        return args.func(args)
    except (UnknownSuite, UsageError, ParseError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OivalError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
