"""Benchmark the numba kernels against the scipy fallback.

The hot path of the package is the one-period Crank-Nicolson sweep (cyclic
tridiagonal solves) inside power iterations inside golden-section searches;
the secondary hot loop is the Cauchy simulator's Dirichlet stepping.  Run:

    python benchmarks/bench_backends.py [--nt 512] [--n 256] [--repeat 5]
"""

import argparse
import time

import numpy as np

from kppspeed import kernels
from kppspeed.fields import CoefficientSet
from kppspeed.operators import ActionFamily, build_grid
from kppspeed.eigen import principal_eigen_floquet
from kppspeed.simulate import smooth_bump, solve_cauchy
from kppspeed.speed import spreading_speed


def time_call(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--nt", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cs = CoefficientSet.from_expressions(
        A="1 + 0.5*cos(2*pi*x)", q="0.3*sin(2*pi*x)",
        mu="1 + 0.5*cos(2*pi*t)*cos(2*pi*x)")
    grid = build_grid(cs.geometry, args.n, args.nt)
    sim_cs = CoefficientSet.from_expressions(A="1", mu="1")
    sim_grid = build_grid(sim_cs.geometry, 64, 100)

    cases = {
        "period map (one application)":
            lambda: ActionFamily(cs, [0.7], grid).step_period(np.ones(grid.npoints)),
        "floquet eigensolve":
            lambda: principal_eigen_floquet(cs, [0.7], grid),
        "spreading speed (golden section)":
            lambda: spreading_speed(cs, [1.0], grid, tol=1e-4),
        "cauchy run (t_end=5)":
            lambda: solve_cauchy(sim_cs, smooth_bump(0.0, 1.0, 1.0), cells=40,
                                 t_end=5.0, grid=sim_grid),
    }

    backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
    results = {}
    for backend in backends:
        kernels.set_backend(backend)
        if backend == "numba":  # trigger compilation outside the timing
            ActionFamily(cs, [0.7], grid).step_period(np.ones(grid.npoints))
        for name, fn in cases.items():
            results[(backend, name)] = time_call(fn, args.repeat)
    kernels.set_backend("auto")

    width = max(len(n) for n in cases)
    print(f"n={args.n}, nt={args.nt}, best of {args.repeat}")
    print(f"{'case':{width}}  " + "  ".join(f"{b:>10}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for name in cases:
        row = f"{name:{width}}  "
        row += "  ".join(f"{results[(b, name)]:10.4f}" for b in backends)
        if len(backends) == 2:
            row += f"  {results[('numpy', name)] / results[('numba', name)]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
