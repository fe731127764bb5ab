"""Command line front end: ``sweep``, ``verify`` and ``bounds``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import _backend, harness


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlp-curse",
        description="Multilevel Picard experiments on the gradient-nonlinearity counterexample.",
    )
    parser.add_argument(
        "--backend", choices=("auto", "compiled", "python"), default="auto", help="recursion kernel"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="estimate errors or moments over a list of dimensions")
    sweep.add_argument("--dims", type=_int_list, required=True, help="e.g. 1224,2048,4096")
    sweep.add_argument("--n", type=int, required=True, help="recursion depth")
    sweep.add_argument("--m", type=int, default=1, help="branching base")
    sweep.add_argument("--couple", action="store_true", help="use m = n")
    sweep.add_argument("--reps", type=int, default=1000)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--mode", choices=harness.MODES, default="error")
    sweep.add_argument("--p", type=float, default=0.25, help="exponent for the growth ratio")
    sweep.add_argument("--point", default="origin", help="'origin', 'T@origin' or 'T@x1,x2,...'")
    sweep.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    sweep.add_argument("--check", action="store_true", help="exit 1 if a bound assertion fails")
    sweep.add_argument("--threads", type=int, default=None)
    sweep.add_argument("--no-timing", action="store_true", help="leave wall_ms empty (byte-stable CSV)")
    sweep.add_argument("--json", action="store_true", help="also print rows as JSON lines on stderr")

    ver = sub.add_parser("verify", help="run the oracle checks")
    ver.add_argument(
        "--suite",
        default="all",
        help="comma-separated subset of " + ",".join(harness.SUITES) + " (default: all)",
    )
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--json", action="store_true")

    bnd = sub.add_parser("bounds", help="print theoretical bounds")
    bnd.add_argument("--dims", type=_int_list, required=True)
    bnd.add_argument("--n", type=int, required=True)
    bnd.add_argument("--m", type=int, default=1)
    bnd.add_argument("--json", action="store_true")
    return parser


def _cmd_sweep(args, backend: str) -> int:
    t, x = harness.parse_point(args.point)
    config = harness.SweepConfig(
        dims=args.dims,
        n=args.n,
        m=args.m,
        couple=args.couple,
        reps=args.reps,
        seed=args.seed,
        t=t,
        x=x,
        mode=args.mode,
        p=args.p,
        out=args.out,
        threads=args.threads,
        timing=not args.no_timing,
        backend=backend,
    )
    rows = harness.run_sweep(config)
    if args.out is None:
        sys.stdout.write(harness.rows_to_csv(rows, growth=config.mode == "growth"))
    if args.json:
        for row in rows:
            print(json.dumps(row.__dict__), file=sys.stderr)
    if args.check:
        failures = harness.check_rows(config, rows)
        for msg in failures:
            print("CHECK FAILED: " + msg, file=sys.stderr)
        return 1 if failures else 0
    return 0


def _cmd_verify(args) -> int:
    suites = harness.SUITES if args.suite == "all" else tuple(s for s in args.suite.split(",") if s)
    results = harness.run_verify(suites, seed=args.seed)
    for res in results:
        print(res.line())
    if args.json:
        print(
            json.dumps(
                [{"name": r.name, "passed": r.passed, "margin": r.margin, "detail": r.detail} for r in results]
            )
        )
    return 0 if all(r.passed for r in results) else 1


def _cmd_bounds(args) -> int:
    for d in args.dims:
        print(harness.print_bounds(d, args.n, args.m, as_json=args.json))
        if not args.json and d != args.dims[-1]:
            print()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    backend = args.backend
    if backend == "compiled" and not _backend.compiled_available():
        parser.error("compiled core is not built")
    try:
        if args.command == "sweep":
            return _cmd_sweep(args, backend)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_bounds(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
