"""Command-line interface.

    kpp-speed run <scenario-file> [--out DIR] [--format csv|json|both]
                                  [--jobs N] [--seed S]
    kpp-speed eig   --A ... [--q ...] --mu ... [--T ...] [--L ...]
                    --lam "0.5[ 0.0]" [--n ...] [--nt ...] [--adjoint]
    kpp-speed speed --A ... [--q ...] --mu ... [--T ...] [--L ...]
                    --e "1[ 0]" [--n ...] [--nt ...] [--refine] [--richardson]

The run subcommand executes the scenario's named experiment, writes the
report, prints the verdict summary, and exits nonzero iff any assertion
FAILed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .eigen import adjoint_eigenpair, principal_eigenvalue
from .fields import CoefficientSet
from .operators import build_grid
from .scenario import load_scenario, write_report
from .speed import spreading_speed


def _parse_vector(text: str) -> list[float]:
    return [float(tok) for tok in str(text).replace(",", " ").split()]


def _parse_params(tokens) -> dict:
    out = {}
    for tok in tokens or []:
        name, _, value = tok.partition("=")
        if not _:
            raise SystemExit(f"--param expects name=value, got {tok!r}")
        out[name] = float(value)
    return out


def _coeffs_from_args(args) -> CoefficientSet:
    L = _parse_vector(args.L)
    q = _parse_vector_or_exprs(args.q, len(L)) if args.q else None
    return CoefficientSet.from_expressions(
        A=args.A, q=q, mu=args.mu, T=args.T, L=(L[0] if len(L) == 1 else L),
        params=_parse_params(args.param))


def _parse_vector_or_exprs(text: str, dim: int):
    parts = [p.strip() for p in str(text).split(";")]
    if len(parts) == 1 and dim == 1:
        return (parts[0],)
    if len(parts) != dim:
        raise SystemExit(f"--q needs {dim} ';'-separated components")
    return tuple(parts)


def _grid_from_args(args, geometry):
    n = [int(t) for t in str(args.n).split()]
    return build_grid(geometry, n[0] if len(n) == 1 else n, args.nt)


def _add_coeff_flags(p: argparse.ArgumentParser):
    p.add_argument("--A", default="1", help="diffusion expression (scalar a -> a*I)")
    p.add_argument("--q", default=None, help="drift expression; 2D: 'q1;q2'")
    p.add_argument("--mu", default="1", help="growth-rate expression")
    p.add_argument("--T", type=float, default=1.0, help="time period")
    p.add_argument("--L", default="1.0", help="cell lengths, e.g. '1.0' or '1 1'")
    p.add_argument("--n", default="256", help="grid points per axis")
    p.add_argument("--nt", type=int, default=None, help="time steps per period")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="named expression parameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpp-speed",
        description="Periodic principal eigenvalues and KPP spreading speeds")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario experiment")
    run.add_argument("scenario", help="scenario file path")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--format", default=None, choices=("csv", "json", "both"))
    run.add_argument("--jobs", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)

    eig = sub.add_parser("eig", help="one-shot principal eigenvalue")
    _add_coeff_flags(eig)
    eig.add_argument("--lam", default="0", help="wavevector, e.g. '0.5' or '0.5 0'")
    eig.add_argument("--route", default="auto", choices=("auto", "steady", "floquet"))
    eig.add_argument("--adjoint", action="store_true",
                     help="also compute the adjoint eigenfunction pairing")

    speed = sub.add_parser("speed", help="one-shot spreading speed")
    _add_coeff_flags(speed)
    speed.add_argument("--e", default="1", help="propagation direction")
    speed.add_argument("--refine", action="store_true",
                       help="2D half-space refinement after the ray search")
    speed.add_argument("--richardson", action="store_true",
                       help="dt-Richardson extrapolation of Floquet eigenvalues")
    return parser


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    if args.jobs is not None:
        sc.jobs = args.jobs
    if args.out is not None:
        sc.output_dir = args.out
    if args.format is not None:
        sc.output_format = args.format
    from .experiments import run_experiment
    report = run_experiment(sc)
    paths = write_report(report, sc.output_format, sc.output_dir)
    for line in report.summary_lines():
        print(line)
    for p in paths:
        print(f"wrote {p}")
    if not report.passed:
        print("FAIL: at least one assertion failed")
        return 1
    print("PASS")
    return 0


def _cmd_eig(args) -> int:
    coeffs = _coeffs_from_args(args)
    grid = _grid_from_args(args, coeffs.geometry)
    lam = _parse_vector(args.lam)
    res = principal_eigenvalue(coeffs, lam, grid, route=args.route)
    print(f"k = {res.k!r}")
    print(f"route = {res.route}, iterations = {res.iterations}")
    print(f"sandwich bounds = [{res.lower!r}, {res.upper!r}] "
          f"(width {res.upper - res.lower:.3e})")
    if args.adjoint:
        pair = adjoint_eigenpair(coeffs, lam, grid)
        print(f"adjoint k = {pair.k_adjoint!r} (pairing normalized to 1)")
    return 0


def _cmd_speed(args) -> int:
    coeffs = _coeffs_from_args(args)
    grid = _grid_from_args(args, coeffs.geometry)
    e = _parse_vector(args.e)
    res = spreading_speed(coeffs, e, grid, refine=args.refine,
                          richardson=args.richardson)
    print(f"c* = {res.c_star!r}")
    print(f"lambda* = {np.asarray(res.lam_star).tolist()}")
    print(f"route = {res.route}, profile samples = {len(res.profile)}")
    if res.eigen is not None:
        print(f"minimizer k = {res.eigen.k!r} in "
              f"[{res.eigen.lower!r}, {res.eigen.upper!r}]")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "eig":
        return _cmd_eig(args)
    if args.command == "speed":
        return _cmd_speed(args)
    raise AssertionError(args.command)


def entrypoint() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
