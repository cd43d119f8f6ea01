"""Command-line entry point.

Exit codes: 0 success, 2 infeasible, 3 no convergence, 4 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import formats
from . import vortex as vm
from .errors import Diverged, Infeasible, InputError, MaxIterations
from .generators import KINDS, generate
from .solver import SolveOptions, scalar_threshold, solve_scalar_full, solve_vortex
from .sweep import SweepPlan, geometric_factors, run_sweep

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INPUT = 4

log = logging.getLogger("graphvortex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which would collide with
    # the "infeasible" code.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of reals: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphvortex", description="Non-Abelian vortex equations on finite graphs.")
    parser.add_argument("--verbose", "-V", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance(p, with_params=True):
        p.add_argument("-g", "--graph", required=True, help="graph file")
        p.add_argument("-v", "--vortices", help="vortex file (omit for n = 0)")
        if with_params:
            p.add_argument("--N", type=int, required=True, help="group rank, >= 2")
            p.add_argument("--me2", type=float, required=True, help="m_e squared")
            p.add_argument("--mg2", type=float, required=True, help="m_g squared")

    def solver_opts(p):
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--max-iter", type=int, default=200)

    p = sub.add_parser("solve", help="solve the vortex system and print a JSON report")
    instance(p)
    solver_opts(p)

    p = sub.add_parser("check", help="existence test only")
    instance(p)

    p = sub.add_parser("scalar", help="solve the equal-coupling scalar equation")
    instance(p, with_params=False)
    p.add_argument("--lambda1", type=float, required=True)
    solver_opts(p)

    p = sub.add_parser("sweep", help="equal-coupling sweep toward the existence boundary")
    instance(p, with_params=False)
    p.add_argument("--N", type=int, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--lambda-factors", type=_floats, help="e.g. 1.5,1.2,1.05,1.01 (multiples of 4πn/|V|)")
    group.add_argument("--geometric", type=int, metavar="K", help="factors 1 + 2^-k for k = 0..K")
    p.add_argument("--workers", type=int, default=1)
    solver_opts(p)

    p = sub.add_parser("gen", help="write a generated graph file")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("-o", "--output", help="output path (default stdout)")
    return parser


def _load(args):
    g = formats.load_graph(args.graph)
    vx = formats.load_vortices(args.vortices, g) if args.vortices else vm.VortexSet()
    return g, vx


def _emit(doc, out):
    out.write(formats.dumps(doc) + "\n")


def _cmd_solve(args, out):
    g, vx = _load(args)
    p = vm.ModelParams(args.N, args.me2, args.mg2)
    feas = vm.check_feasible(g, p, vx.n)
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter)
    try:
        sol = solve_vortex(g, p, vx, opts)
    except Infeasible as exc:
        log.error("%s", exc)
        _emit(formats.solve_report(g, p, vx, feas), out)
        return EXIT_INFEASIBLE
    except (MaxIterations, Diverged) as exc:
        log.error("%s", exc)
        _emit(formats.solve_report(g, p, vx, feas), out)
        return EXIT_NO_CONVERGENCE
    _emit(formats.solve_report(g, p, vx, feas, sol), out)
    return EXIT_OK


def _cmd_check(args, out):
    g, vx = _load(args)
    p = vm.ModelParams(args.N, args.me2, args.mg2)
    feas = vm.check_feasible(g, p, vx.n)
    _emit(
        {
            "params": {"N": p.N, "me2": p.me2, "mg2": p.mg2, "n": vx.n},
            "volume": feas.volume,
            "threshold": feas.threshold,
            "margin": feas.margin,
            "feasible": feas.feasible,
        },
        out,
    )
    if not feas.feasible:
        log.error("infeasible: |V| = %.17g <= threshold %.17g", feas.volume, feas.threshold)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_scalar(args, out):
    g, vx = _load(args)
    if not args.lambda1 > 0:
        raise vm.InvalidParams(f"--lambda1 must be positive, got {args.lambda1}")
    thr = scalar_threshold(args.lambda1, vx.n)
    doc = {
        "params": {"lambda1": args.lambda1, "n": vx.n},
        "volume": g.volume,
        "threshold": thr,
        "margin": g.volume - thr,
        "feasible": vm.is_strictly_above(g.volume, thr),
        "converged": False,
        "iterations": None,
        "residual_inf": None,
        "u0": None,
        "v": None,
        "u": None,
    }
    try:
        sol = solve_scalar_full(g, args.lambda1, vx, SolveOptions(tol=args.tol, max_iter=args.max_iter))
    except Infeasible as exc:
        log.error("%s", exc)
        _emit(doc, out)
        return EXIT_INFEASIBLE
    except (MaxIterations, Diverged) as exc:
        log.error("%s", exc)
        _emit(doc, out)
        return EXIT_NO_CONVERGENCE
    doc.update(
        converged=True,
        iterations=sol.iterations,
        residual_inf=sol.final_residual_inf,
        u0=formats.field_map(g, sol.background.u0),
        v=formats.field_map(g, sol.v),
        u=formats.field_map(g, sol.u),
    )
    _emit(doc, out)
    return EXIT_OK


def _cmd_sweep(args, out):
    g, vx = _load(args)
    if args.geometric is not None:
        factors = geometric_factors(args.geometric)
    else:
        factors = args.lambda_factors or [1.5, 1.2, 1.05, 1.01]
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter)
    plan = SweepPlan.from_factors(g, vx, args.N, factors, opts)
    report = run_sweep(plan, workers=args.workers)
    doc = report.to_dict()
    doc["factors"] = factors
    for rec in doc["records"]:
        for k, val in rec.items():
            if isinstance(val, float):
                rec[k] = formats._num(val)
    _emit(doc, out)
    return EXIT_OK


def _cmd_gen(args, out):
    g = generate(args.kind, args.size, args.seed, mu=args.mu, weight=args.weight)
    text = formats.format_graph(g)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "check": _cmd_check,
    "scalar": _cmd_scalar,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
