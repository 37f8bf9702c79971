"""Command line entry point: ``rrd {theory,simulate,table,gordon}``."""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .auxiliary import GordonCheckSpec, gordon_report, gordon_samples
from .harness import (ExperimentReport, ExperimentSpec, Mode, emit_report, render_gordon,
                      run_experiment, table_specs, theory_value)
from .primal import SolverConfig
from .problem import ConfigurationError, ObjectiveKind, ShapeConfig
from .theory import EpsilonConfig, Side

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")


def _add_problem(p, n_default=200):
    p.add_argument("--objective", choices=("lp", "gl", "bp"), default="lp")
    p.add_argument("--alpha1", type=float, default=0.5)
    p.add_argument("--alpha2", type=float, nargs="+", default=[0.5])
    p.add_argument("--beta", type=float, nargs="+", default=[1.0])
    p.add_argument("--c-file", help="whitespace separated coefficients for --objective gl")
    p.add_argument("--eps1", type=float, default=0.0)
    p.add_argument("--eps5", type=float, default=0.0)
    p.add_argument("--n", type=int, default=n_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="closed-form limits of xi/sqrt(n)")
    _add_problem(p)
    p.add_argument("--side", choices=("lower", "upper", "both"), default="both")
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo estimate for one configuration")
    _add_problem(p)
    p.add_argument("--mode", choices=("primal", "aux"), default="primal")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--max-iter", type=int, default=50_000)
    _add_output(p)

    p = sub.add_parser("table", help="simulation and theory rows of a results table")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aux", action="store_true", help="simulate the auxiliary program")
    _add_output(p)

    p = sub.add_parser("gordon", help="Monte Carlo check of the comparison inequality")
    p.add_argument("--objective", choices=("lp", "bp"), default="lp")
    p.add_argument("--alpha1", type=float, default=0.5)
    p.add_argument("--alpha2", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset", type=float, nargs="+",
                   help="thresholds in units of sqrt(n); default is the theory value")
    _add_output(p)
    return parser


def _read_c(path, n):
    if path is None:
        raise ConfigurationError("--objective gl needs --c-file")
    try:
        c = np.loadtxt(path, dtype=float, ndmin=1).ravel()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    return c


def _shapes(args):
    """(shape, objective) pairs for every requested alpha2/beta value."""
    c = _read_c(args.c_file, args.n) if args.objective == "gl" else None
    n = c.size if c is not None else args.n
    out = []
    for a2 in args.alpha2:
        for beta in args.beta:
            shape = ShapeConfig(n, args.alpha1, a2, beta)
            out.append((shape, shape.objective(args.objective, c)))
    return out


def _write(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc.strerror}") from exc


def cmd_theory(args):
    eps = EpsilonConfig(args.eps1, args.eps5)
    reports = []
    for shape, obj in _shapes(args):
        lower = theory_value(shape, obj, eps, Side.LOWER).xi_over_sqrt_n
        upper = theory_value(shape, obj, eps, Side.UPPER).xi_over_sqrt_n
        main = upper if args.side == "upper" else lower
        param = shape.beta if obj.kind is ObjectiveKind.BP_SPLIT else shape.alpha2
        reports.append(ExperimentReport(param, shape.n, 0, main, 0.0, 0.0, 0, 0,
                                        lower, upper))
    _write(emit_report(reports, args.format), args.out)
    return 0


def cmd_simulate(args):
    eps = EpsilonConfig(args.eps1, args.eps5)
    solver = SolverConfig(rho=args.rho, max_iter=args.max_iter)
    mode = Mode.PRIMAL_SIM if args.mode == "primal" else Mode.AUX_SIM
    reports = [run_experiment(ExperimentSpec(mode, shape, obj, args.trials, args.seed,
                                             eps, solver))
               for shape, obj in _shapes(args)]
    _write(emit_report(reports, args.format), args.out)
    return _status(reports)


def cmd_table(args):
    reports = [run_experiment(s)
               for s in table_specs(args.which, args.n, args.trials, args.seed, args.aux)]
    _write(emit_report(reports, args.format), args.out)
    return _status(reports)


def cmd_gordon(args):
    shape = ShapeConfig(args.n, args.alpha1, args.alpha2, args.beta)
    obj = shape.objective(args.objective)
    if args.offset is None:
        offsets = [theory_value(shape, obj).xi_over_sqrt_n]
    else:
        offsets = args.offset
    root_n = math.sqrt(args.n)
    samples = gordon_samples(GordonCheckSpec(shape, obj, offsets[0] * root_n,
                                             args.trials, args.seed))
    reports = [gordon_report(samples, off * root_n) for off in offsets]
    _write(render_gordon(reports, args.n, args.format), args.out)
    if samples.failures > 0.2 * args.trials:
        print(f"warning: {samples.failures} of {args.trials} trials failed", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def _status(reports):
    bad = [r for r in reports if r.unreliable]
    for r in bad:
        print(f"warning: param {r.param:g}: {r.trials_excluded} of {r.trials} trials "
              "excluded, report unreliable", file=sys.stderr)
    return EXIT_NUMERIC if bad else 0


COMMANDS = {"theory": cmd_theory, "simulate": cmd_simulate, "table": cmd_table,
            "gordon": cmd_gordon}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
