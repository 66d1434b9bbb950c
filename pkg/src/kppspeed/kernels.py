"""Hot numeric kernels with a numba fast path and a scipy fallback.

The dominating inner loop of the whole package is the one-period
Crank-Nicolson sweep over cyclic tridiagonal systems (1D periodic cell),
executed inside power iterations inside golden-section searches.  The numba
path fuses the whole period into one jitted call; the fallback drives
``scipy.linalg.solve_banded`` plus a Sherman-Morrison correction for the
periodic corner entries.

Backend selection: the environment variable ``KPPSPEED_BACKEND`` may be set
to ``numba``, ``numpy`` or ``auto`` (default).  ``set_backend`` switches at
runtime, e.g. for benchmarking both paths in one process.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_banded

__all__ = ["set_backend", "active_backend", "cn_period", "tridiag_solve",
           "cyclic_solve", "HAS_NUMBA"]

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via KPPSPEED_BACKEND=numpy
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


_backend = os.environ.get("KPPSPEED_BACKEND", "auto").strip().lower()
if _backend not in ("auto", "numba", "numpy"):
    raise ValueError(f"KPPSPEED_BACKEND must be auto|numba|numpy, got {_backend!r}")
if _backend == "numba" and not HAS_NUMBA:
    raise ImportError("KPPSPEED_BACKEND=numba but numba is not importable")


def set_backend(name: str) -> None:
    global _backend
    name = name.strip().lower()
    if name not in ("auto", "numba", "numpy"):
        raise ValueError("backend must be auto|numba|numpy")
    if name == "numba" and not HAS_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    _backend = name


def active_backend() -> str:
    if _backend == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return _backend


# --- numba kernels -----------------------------------------------------------
#
# Band convention for an n x n cyclic tridiagonal matrix M:
#   M[i, i]   = d[i]
#   M[i, i-1] = dl[i]   (i = 1..n-1;  dl[0] unused)
#   M[i, i+1] = du[i]   (i = 0..n-2;  du[n-1] unused)
#   M[0, n-1] = c0,  M[n-1, 0] = c1


@njit(cache=True)
def _thomas2(dl, d, du, b1, b2):
    """Two simultaneous tridiagonal solves sharing one elimination sweep."""
    n = d.shape[0]
    cp = np.empty(n)
    x1 = np.empty(n)
    x2 = np.empty(n)
    beta = d[0]
    cp[0] = du[0] / beta
    x1[0] = b1[0] / beta
    x2[0] = b2[0] / beta
    for i in range(1, n):
        beta = d[i] - dl[i] * cp[i - 1]
        cp[i] = du[i] / beta if i < n - 1 else 0.0
        x1[i] = (b1[i] - dl[i] * x1[i - 1]) / beta
        x2[i] = (b2[i] - dl[i] * x2[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x1[i] -= cp[i] * x1[i + 1]
        x2[i] -= cp[i] * x2[i + 1]
    return x1, x2


@njit(cache=True)
def _cyclic_solve(dl, d, du, c0, c1, b):
    """Sherman-Morrison solve of the cyclic tridiagonal system M x = b."""
    n = d.shape[0]
    gamma = -d[0]
    dd = d.copy()
    dd[0] = d[0] - gamma
    dd[n - 1] = d[n - 1] - c0 * c1 / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[n - 1] = c1
    y, z = _thomas2(dl, dd, du, b, u)
    vy = y[0] + (c0 / gamma) * y[n - 1]
    vz = z[0] + (c0 / gamma) * z[n - 1]
    fact = vy / (1.0 + vz)
    return y - fact * z


@njit(cache=True)
def _transpose_bands(dl, d, du, c0, c1):
    n = d.shape[0]
    dlT = np.empty(n)
    duT = np.empty(n)
    dlT[0] = 0.0
    duT[n - 1] = 0.0
    for i in range(1, n):
        dlT[i] = du[i - 1]
    for i in range(n - 1):
        duT[i] = dl[i + 1]
    return dlT, d, duT, c1, c0


@njit(cache=True)
def _cyclic_matvec(dl, d, du, c0, c1, v):
    n = d.shape[0]
    out = np.empty(n)
    out[0] = d[0] * v[0] + du[0] * v[1] + c0 * v[n - 1]
    for i in range(1, n - 1):
        out[i] = dl[i] * v[i - 1] + d[i] * v[i] + du[i] * v[i + 1]
    out[n - 1] = dl[n - 1] * v[n - 2] + d[n - 1] * v[n - 1] + c1 * v[0]
    return out


@njit(cache=True)
def _cn_period_numba(ll, ld, lu, lc0, lc1, rl, rd, ru, rc0, rc1, v0, transpose):
    """One period of Crank-Nicolson over cyclic tridiagonal level matrices.

    Forward:     v_{m+1} = L_{m+1}^{-1} (R_m v_m),        m = 0..n_t-1
    Transposed:  w_m     = R_m^T (L_{m+1}^{-T} w_{m+1}),  m = n_t-1..0
    Returns all n_t+1 levels (transposed fills them from the top down).
    """
    n_levels = ld.shape[0]
    n_t = n_levels - 1
    n = ld.shape[1]
    levels = np.empty((n_levels, n))
    if not transpose:
        levels[0, :] = v0
        for m in range(n_t):
            w = _cyclic_matvec(rl[m], rd[m], ru[m], rc0[m], rc1[m], levels[m])
            levels[m + 1, :] = _cyclic_solve(ll[m + 1], ld[m + 1], lu[m + 1],
                                             lc0[m + 1], lc1[m + 1], w)
    else:
        levels[n_t, :] = v0
        for mm in range(n_t):
            m = n_t - 1 - mm
            a, b, c, d, e = _transpose_bands(ll[m + 1], ld[m + 1], lu[m + 1],
                                             lc0[m + 1], lc1[m + 1])
            z = _cyclic_solve(a, b, c, d, e, levels[m + 1])
            a, b, c, d, e = _transpose_bands(rl[m], rd[m], ru[m], rc0[m], rc1[m])
            levels[m, :] = _cyclic_matvec(a, b, c, d, e, z)
    return levels


# --- scipy fallback ----------------------------------------------------------


def _cyclic_solve_np(dl, d, du, c0, c1, b):
    n = d.shape[0]
    gamma = -d[0]
    dd = d.copy()
    dd[0] = d[0] - gamma
    dd[n - 1] = d[n - 1] - c0 * c1 / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = du[:-1]
    ab[1, :] = dd
    ab[2, :-1] = dl[1:]
    rhs = np.zeros((n, 2))
    rhs[:, 0] = b
    rhs[0, 1] = gamma
    rhs[n - 1, 1] = c1
    sol = solve_banded((1, 1), ab, rhs)
    y, z = sol[:, 0], sol[:, 1]
    fact = (y[0] + (c0 / gamma) * y[n - 1]) / (1.0 + z[0] + (c0 / gamma) * z[n - 1])
    return y - fact * z


def _cyclic_matvec_np(dl, d, du, c0, c1, v):
    out = d * v
    out[:-1] += du[:-1] * v[1:]
    out[1:] += dl[1:] * v[:-1]
    out[0] += c0 * v[-1]
    out[-1] += c1 * v[0]
    return out


def _transpose_bands_np(dl, d, du, c0, c1):
    dlT = np.zeros_like(dl)
    duT = np.zeros_like(du)
    dlT[1:] = du[:-1]
    duT[:-1] = dl[1:]
    return dlT, d, duT, c1, c0


def _cn_period_np(ll, ld, lu, lc0, lc1, rl, rd, ru, rc0, rc1, v0, transpose):
    n_levels, n = ld.shape
    n_t = n_levels - 1
    levels = np.empty((n_levels, n))
    if not transpose:
        levels[0] = v0
        for m in range(n_t):
            w = _cyclic_matvec_np(rl[m], rd[m], ru[m], rc0[m], rc1[m], levels[m])
            levels[m + 1] = _cyclic_solve_np(ll[m + 1], ld[m + 1], lu[m + 1],
                                             lc0[m + 1], lc1[m + 1], w)
    else:
        levels[n_t] = v0
        for m in range(n_t - 1, -1, -1):
            bands = _transpose_bands_np(ll[m + 1], ld[m + 1], lu[m + 1], lc0[m + 1], lc1[m + 1])
            z = _cyclic_solve_np(*bands, levels[m + 1])
            bands = _transpose_bands_np(rl[m], rd[m], ru[m], rc0[m], rc1[m])
            levels[m] = _cyclic_matvec_np(*bands, z)
    return levels


def cn_period(lhs_bands, rhs_bands, v0, transpose=False):
    """Run one Crank-Nicolson period; returns all time levels (n_t+1, n).

    ``lhs_bands``/``rhs_bands`` are tuples (dl, d, du, c0, c1) of per-level
    arrays with shapes (n_t+1, n) for the bands and (n_t+1,) for the corners.
    """
    args = (*lhs_bands, *rhs_bands, np.asarray(v0, dtype=float), bool(transpose))
    if active_backend() == "numba":
        return _cn_period_numba(*args)
    return _cn_period_np(*args)


# --- plain (Dirichlet) tridiagonal solve for the Cauchy simulator ------------


@njit(cache=True)
def _tridiag_numba(dl, d, du, b):
    n = d.shape[0]
    cp = np.empty(n)
    x = np.empty(n)
    beta = d[0]
    cp[0] = du[0] / beta
    x[0] = b[0] / beta
    for i in range(1, n):
        beta = d[i] - dl[i] * cp[i - 1]
        cp[i] = du[i] / beta if i < n - 1 else 0.0
        x[i] = (b[i] - dl[i] * x[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def tridiag_solve(dl, d, du, b):
    """Solve the (non-cyclic) tridiagonal system with bands (dl, d, du)."""
    if active_backend() == "numba":
        return _tridiag_numba(dl, d, du, b)
    ab = np.zeros((3, d.shape[0]))
    ab[0, 1:] = du[:-1]
    ab[1, :] = d
    ab[2, :-1] = dl[1:]
    return solve_banded((1, 1), ab, b)


def cyclic_solve(dl, d, du, c0, c1, b):
    """Solve the cyclic tridiagonal system (corners c0 = M[0,-1], c1 = M[-1,0])."""
    if active_backend() == "numba":
        return _cyclic_solve(dl, d, du, c0, c1, b)
    return _cyclic_solve_np(dl, d, du, c0, c1, b)
