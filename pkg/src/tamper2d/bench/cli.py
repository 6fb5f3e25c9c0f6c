"""Command line: ``run <suite>``, ``replay <trace>``, ``validate <scenario>``.

``run`` exits 0 only when every gate of the suite holds; ``validate`` exits
0 only when every given scenario is valid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..executor import ExecConfig
from ..trace import TraceError
from .replay import replay
from .runner import METHODS
from .scenario import ScenarioInvalid, validate
from .suite import load_suite, resolve_suite, run_suite, table_markdown


def _methods(text: str) -> tuple[str, ...]:
    out = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in out if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s): {', '.join(bad)}; choose from {', '.join(METHODS)}")
    return out


def _epsilon(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("epsilon must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tamper2d", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite and check its gates")
    run.add_argument("suite", help="suite file, or the name of a shipped suite (horizontal, kitchen, grocery)")
    run.add_argument("--method", type=_methods, default=None,
                     help="comma-separated methods to run instead of the suite's list")
    run.add_argument("--seed", type=int, default=None, help="run every scenario with this seed only")
    run.add_argument("--epsilon", type=_epsilon, default=None, help="override the occlusion shrink ratio")
    run.add_argument("--out", type=Path, default=None, help="directory for traces, tables and the gate report")
    run.add_argument("--budget", type=float, default=None, help="motion planning budget per query (s)")
    run.add_argument("--quiet", action="store_true", help="do not print one line per episode")

    rp = sub.add_parser("replay", help="render a recorded trace step by step")
    rp.add_argument("trace", type=Path)
    rp.add_argument("--plot", type=Path, default=None, help="write one image per world snapshot into this directory")

    va = sub.add_parser("validate", help="check scenario files")
    va.add_argument("scenario", type=Path, nargs="+")
    return ap


def cmd_run(args) -> int:
    try:
        suite = load_suite(resolve_suite(args.suite))
    except FileNotFoundError as e:
        print(e, file=sys.stderr)
        return 2
    cfg = ExecConfig() if args.budget is None else ExecConfig(budget_s=args.budget)
    log = None if args.quiet else print
    try:
        res = run_suite(suite, args.out, args.method, args.seed, args.epsilon, cfg, log)
    except ScenarioInvalid as e:
        print(e, file=sys.stderr)
        return 2
    for m in res.stats:
        print(f"\n{suite.name}: {m}\n")
        print(table_markdown([r for r in res.rows if r.method == m]))
    for g in res.gates:
        print(g.line())
    if args.out is not None:
        print(f"outputs written to {args.out}")
    return 0 if res.passed else 1


def cmd_replay(args) -> int:
    try:
        trace, lines = replay(args.trace, args.plot)
    except TraceError as e:
        print(f"{args.trace}: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    print("\n".join(lines))
    print(f"{len(trace.events)} events")
    return 0


def cmd_validate(args) -> int:
    status = 0
    for p in args.scenario:
        try:
            diags = validate(p)
        except FileNotFoundError:
            print(f"{p}: no such file", file=sys.stderr)
            status = 1
            continue
        if diags:
            status = 1
            print(f"{p}: {len(diags)} problem(s)")
            for d in diags:
                print(f"  {d}")
        else:
            print(f"{p}: ok")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "replay": cmd_replay, "validate": cmd_validate}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
