"""Command line front end: ``solve``, ``bench`` and ``slope``.

Exit codes: 0 success, 2 bad parameters, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import GENERATORS, METHODS, emit_csv, fit_slope, make_instance, read_csv, \
    solve_method, sweep_run
from .errors import (CapabilityError, ConfigurationError, DataIOError, NonConvergenceError,
                     NumericalError, ParameterError)
from .problem import load_problem

EXIT_OK, EXIT_PARAM, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _eps_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of floats: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def build_parser():
    ap = argparse.ArgumentParser(prog="conicfo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("--problem", required=True, help="JSON problem file")
    s.add_argument("--method", required=True, choices=METHODS)
    s.add_argument("--eps", required=True, type=float)
    for name in ("rd", "mu", "delta", "rho", "mu0", "rho0"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--kouter", type=int)
    s.add_argument("--out", help="write the full report as JSON")

    b = sub.add_parser("bench", help="eps sweep on a generated instance")
    b.add_argument("--instance", required=True, choices=GENERATORS)
    b.add_argument("--p", type=float)
    b.add_argument("--n", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--method", required=True, choices=METHODS)
    b.add_argument("--eps-list", required=True, type=_eps_list)
    b.add_argument("--out", required=True, help="CSV output path")

    sl = sub.add_parser("slope", help="fit the complexity exponent of a sweep CSV")
    sl.add_argument("--in", dest="path", required=True)
    sl.add_argument("--field", default="total",
                    choices=("proj_U", "proj_K", "proj_Kstar", "total"))
    return ap


def _solve(args):
    problem, known = load_problem(args.problem)
    rep = solve_method(problem, known, args.method, args.eps, rd=args.rd, mu=args.mu,
                       delta=args.delta, rho=args.rho, mu0=args.mu0, rho0=args.rho0,
                       kouter=args.kouter)
    summary = {k: v for k, v in rep.to_dict().items() if k not in ("u", "x")}
    print(json.dumps(summary, indent=1))
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(rep.to_dict(), fh, indent=1)
        except OSError as exc:
            raise DataIOError(f"cannot write {args.out}: {exc.strerror or exc}") from exc


def _bench(args):
    inst = make_instance(args.instance, n=args.n, seed=args.seed, p=args.p)
    records = sweep_run(inst, args.method, args.eps_list)
    emit_csv(records, args.out)
    for r in records:
        print(f"{r.method} eps={r.eps:g} total={r.total} outer={r.outer_iters} "
              f"gap={r.subopt_gap:.3e} infeas={r.infeas:.3e} passed={r.passed}")


def _slope(args):
    records = read_csv(args.path)
    print(f"{fit_slope(records, args.field):.6f}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        {"solve": _solve, "bench": _bench, "slope": _slope}[args.command](args)
    except (ParameterError, ConfigurationError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (NonConvergenceError, NumericalError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataIOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
