"""Space-time periodic principal eigenvalues of the linearized operator.

Two computational routes realize the same object, the unique k with a
positive periodic eigenfunction of  L_lam psi = d_t psi - E_lam psi = k psi:

* steady (time-independent coefficients): the largest eigenvalue a of the
  discrete E_lam has the positive Perron eigenfunction and k = -a.  It is
  found by inverse power iteration on (sigma I - E_lam), with sigma a
  Gershgorin row bound of E_lam plus a small margin, so the shifted matrix is
  positive definite in effect and the shift sits just above the target
  eigenvalue (fast convergence).

* Floquet (general space-time periodic coefficients): power iteration on the
  one-period Crank-Nicolson map P gives the principal multiplier rho > 0 and
  its positive fixed direction u; with k = -(1/T) ln rho the tilted levels
  psi(t_m) = e^{k t_m} u(t_m) close periodically and solve the eigenproblem.

Both routes report k as the eigenfunction-weighted average of the pointwise
ratios (L_lam psi)/psi, a convex combination of the sandwich ratios, so the
certified bounds  min (L psi/psi) <= k <= max (L psi/psi)  hold by
construction (Collatz-Wielandt); for the Floquet route this also removes the
O(dt^2) skew of -(1/T) ln rho on effectively time-independent problems (the
raw log-multiplier value is kept in the diagnostics).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import splu
import scipy.sparse as sp

from .fields import CoefficientSet, PeriodicField
from .operators import ActionFamily, Grid, assemble_action

__all__ = [
    "EigenResult", "AdjointPair", "EigenError", "EigenConvergenceError",
    "PositivityError", "principal_eigen_steady", "principal_eigen_floquet",
    "principal_eigenvalue", "adjoint_eigenpair", "k_x_independent",
    "eigen_sandwich", "dk_dB_at_zero",
]

EIG_TOL = 1e-10
WIDTH_TARGET = 1e-6


class EigenError(RuntimeError):
    pass


class EigenConvergenceError(EigenError):
    pass


class PositivityError(EigenError):
    """The computed eigenfunction is not strictly positive (grid too coarse)."""


@dataclass
class EigenResult:
    """Principal eigenvalue k with its positive eigenfunction and certificate.

    phi has shape (npoints,) for the steady route and (n_t, npoints) for the
    Floquet route (time levels t_m = m*dt, m = 0..n_t-1), normalized to
    max phi = 1.  lower/upper are the sandwich bounds min/max (L phi)/phi.
    """

    k: float
    phi: np.ndarray
    lower: float
    upper: float
    iterations: int
    route: str
    grid: Grid
    lam: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def k_extrapolated(self) -> float:
        """Richardson-in-time value when computed, else k itself."""
        return self.diagnostics.get("k_extrapolated", self.k)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass
class AdjointPair:
    """Direct and adjoint eigenfunctions, rescaled so that the space-time
    integral of phi*phi_tilde over (0,T) x C is 1."""

    k: float
    phi: np.ndarray
    phi_tilde: np.ndarray
    grid: Grid
    lam: np.ndarray
    route: str
    k_adjoint: float = 0.0


def _ratio_stats(r: np.ndarray, weights: np.ndarray):
    """Convex ratio average (per level, then across levels) and bounds."""
    if r.ndim == 1:
        r = r[None, :]
        weights = weights[None, :]
    per_level = np.sum(r * weights, axis=1) / np.sum(weights, axis=1)
    k = float(np.mean(per_level))
    return k, float(r.min()), float(r.max())


# --- steady route -------------------------------------------------------------


def principal_eigen_steady(coeffs: CoefficientSet, lam, grid: Grid, *,
                           tol: float = EIG_TOL, width_target: float = WIDTH_TARGET,
                           max_iter: int = 200, v0: Optional[np.ndarray] = None) -> EigenResult:
    """Principal eigenvalue of the steady problem -E_lam phi = k phi.

    Inverse power iteration on (sigma I - E_lam); sigma is the Gershgorin row
    bound of the assembled matrix plus a small margin, a provable upper bound
    for the real spectrum, so the target eigenvalue is extremal for the
    shifted matrix.
    """
    if not coeffs.time_independent:
        raise EigenError("steady route requires time-independent coefficients")
    action = assemble_action(coeffs, lam, grid)
    E = action.matrix
    n = E.shape[0]
    bound = action.gershgorin_upper()
    sigma = bound + 1e-3 * max(1.0, abs(bound))
    lu = splu((sigma * sp.eye_array(n, format="csc") - E).tocsc())

    v = np.ones(n) if v0 is None else np.asarray(v0, dtype=float).reshape(-1).copy()
    v = v / np.max(np.abs(v))
    k_old = None
    k_est = lower = upper = np.nan
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        w = w / np.max(np.abs(w))
        if np.min(w) > 0:
            r = -(E @ w) / w
            k_est, lower, upper = _ratio_stats(r, w * w)
        else:
            k_est = -float(np.dot(w, E @ w) / np.dot(w, w))
            lower, upper = -np.inf, np.inf
        v = w
        if (k_old is not None and abs(k_est - k_old) <= tol * max(1.0, abs(k_est))
                and upper - lower <= width_target):
            break
        k_old = k_est
    else:
        raise EigenConvergenceError(
            f"steady inverse iteration: width {upper - lower:.2e} after {max_iter} iterations")
    if np.min(v) <= 0:
        raise PositivityError("eigenfunction has nonpositive entries; refine the grid")
    phi = v / np.max(v)
    return EigenResult(k_est, phi, lower, upper, it, "steady", grid, action.lam,
                       diagnostics={"sigma": sigma, "gershgorin": bound})


# --- Floquet route --------------------------------------------------------------


def _floquet_levels_to_result(family: ActionFamily, levels: np.ndarray, rho: float,
                              iterations: int, adjoint: bool = False):
    grid = family.grid
    n_t, dt, T = grid.n_t, grid.dt, grid.geometry.period
    k_log = -np.log(rho) / T
    tm = np.arange(n_t) * dt
    # tilt e^{k t} (adjoint: e^{-k t}) closes the levels periodically, since
    # e^{k_log T} * rho = 1 by construction
    tilt = np.exp((-k_log if adjoint else k_log) * tm)
    psi = levels[:n_t] * tilt[:, None]
    scale = np.max(psi)
    psi = psi / scale
    if np.min(psi) <= 0:
        raise PositivityError("periodic eigenfunction has nonpositive values")
    # sandwich ratios with centered time differences over the stored levels
    r = np.empty_like(psi)
    for m in range(n_t):
        dpsi = (psi[(m + 1) % n_t] - psi[(m - 1) % n_t]) / (2 * dt)
        Epsi = family.apply_action(m, psi[m], adjoint=adjoint)
        if adjoint:
            r[m] = (-dpsi - Epsi) / psi[m]
        else:
            r[m] = (dpsi - Epsi) / psi[m]
    k, lower, upper = _ratio_stats(r, psi * psi)
    return k, psi, lower, upper, k_log


def principal_eigen_floquet(coeffs: CoefficientSet, lam, grid: Grid, *,
                            tol: float = EIG_TOL, max_iter: int = 200,
                            v0: Optional[np.ndarray] = None,
                            family: Optional[ActionFamily] = None) -> EigenResult:
    """Principal eigenvalue via power iteration on the one-period map."""
    family = family or ActionFamily(coeffs, lam, grid)
    n = grid.npoints
    v = np.ones(n) if v0 is None else np.asarray(v0, dtype=float).reshape(-1).copy()
    v = v / np.max(np.abs(v))
    rho_old = None
    rho = np.nan
    for it in range(1, max_iter + 1):
        w = family.step_period(v)
        rho = float(np.dot(w, v) / np.dot(v, v))
        v = w / np.max(np.abs(w))
        if rho_old is not None and abs(rho - rho_old) <= tol * max(1.0, abs(rho)):
            break
        rho_old = rho
    else:
        raise EigenConvergenceError(f"period-map power iteration did not settle "
                                    f"(last increment {abs(rho - rho_old):.2e})")
    if not np.isfinite(rho) or rho <= 0:
        raise EigenError("nonpositive principal multiplier: invalid discretization")
    levels = family.step_period(v, store_levels=True)
    k, psi, lower, upper, k_log = _floquet_levels_to_result(family, levels, rho, it)
    return EigenResult(k, psi, lower, upper, it, "floquet", grid, family.lam,
                       diagnostics={"rho": rho, "k_log_multiplier": k_log})


def principal_eigenvalue(coeffs: CoefficientSet, lam, grid: Grid, *,
                         route: str = "auto", richardson: bool = False,
                         v0: Optional[np.ndarray] = None, **kw) -> EigenResult:
    """Route to the steady or Floquet solver.

    ``richardson=True`` (Floquet only) also solves with doubled time steps
    and stores the dt^2-extrapolated eigenvalue in ``k_extrapolated``; the
    returned eigenpair is the fine-level one, so its sandwich bounds still
    certify its own ``k``.
    """
    if route == "auto":
        route = "steady" if coeffs.time_independent else "floquet"
    if route == "steady":
        return principal_eigen_steady(coeffs, lam, grid, v0=v0, **kw)
    if route != "floquet":
        raise ValueError(f"unknown route {route!r}")
    res = principal_eigen_floquet(coeffs, lam, grid, v0=v0, **kw)
    if richardson:
        fine_grid = Grid(grid.geometry, grid.n_space, 2 * grid.n_t)
        start = res.phi[0]
        fine = principal_eigen_floquet(coeffs, lam, fine_grid, v0=start, **kw)
        fine.diagnostics["k_extrapolated"] = (4.0 * fine.k - res.k) / 3.0
        fine.diagnostics["k_coarse"] = res.k
        return fine
    return res


# --- adjoint pair ---------------------------------------------------------------


def adjoint_eigenpair(coeffs: CoefficientSet, lam, grid: Grid, *,
                      tol: float = EIG_TOL, max_iter: int = 200,
                      mismatch_tol: float = 1e-6) -> AdjointPair:
    """Direct and adjoint principal eigenfunctions with unit pairing.

    The discrete adjoint is the exact transpose, so the adjoint eigenvalue
    matches the direct one to solver accuracy; a mismatch beyond
    ``mismatch_tol`` raises.
    """
    if coeffs.time_independent:
        direct = principal_eigen_steady(coeffs, lam, grid, tol=tol, max_iter=max_iter)
        action = assemble_action(coeffs, lam, grid)
        E = action.matrix
        n = E.shape[0]
        sigma = direct.diagnostics["sigma"]
        lu = splu((sigma * sp.eye_array(n, format="csc") - E).tocsc())
        w = np.ones(n)
        k_old = None
        k_adj = np.nan
        ET = E.T.tocsr()
        for _ in range(max_iter):
            w = lu.solve(w, trans="T")
            w = w / np.max(np.abs(w))
            if np.min(w) > 0:
                k_adj, _, _ = _ratio_stats(-(ET @ w) / w, w * w)
                if k_old is not None and abs(k_adj - k_old) <= tol * max(1.0, abs(k_adj)):
                    break
                k_old = k_adj
        if np.min(w) <= 0:
            raise PositivityError("adjoint eigenfunction has nonpositive entries")
        if abs(k_adj - direct.k) > mismatch_tol:
            raise EigenError(f"adjoint eigenvalue mismatch: {k_adj} vs {direct.k}")
        phi = direct.phi
        # pairing integral over (0,T) x C for time-constant functions
        pairing = grid.geometry.period * grid.cell_measure() * float(np.dot(phi, w))
        phi_tilde = w / pairing
        return AdjointPair(direct.k, phi, phi_tilde, grid, direct.lam, "steady", k_adj)

    family = ActionFamily(coeffs, lam, grid)
    direct = principal_eigen_floquet(coeffs, lam, grid, tol=tol, max_iter=max_iter,
                                     family=family)
    n = grid.npoints
    w = np.ones(n)
    rho_old = None
    rho = np.nan
    for _ in range(max_iter):
        z = family.step_period(w, transpose=True)
        rho = float(np.dot(z, w) / np.dot(w, w))
        w = z / np.max(np.abs(z))
        if rho_old is not None and abs(rho - rho_old) <= tol * max(1.0, abs(rho)):
            break
        rho_old = rho
    else:
        raise EigenConvergenceError("adjoint period-map power iteration did not settle")
    levels = family.step_period(w, transpose=True, store_levels=True)
    k_adj, psi_t, lo, up, _ = _floquet_levels_to_result(family, levels, rho, 0, adjoint=True)
    if abs(k_adj - direct.k) > mismatch_tol:
        raise EigenError(f"adjoint eigenvalue mismatch: {k_adj} vs {direct.k}")
    psi = direct.phi
    weights = grid.dt * grid.cell_measure()
    pairing = weights * float(np.sum(psi * psi_t))
    psi_t = psi_t / pairing
    return AdjointPair(direct.k, psi, psi_t, grid, family.lam, "floquet", k_adj)


# --- closed form, sandwich, derivative -------------------------------------------


def k_x_independent(coeffs: CoefficientSet, lam, n_t: int = 512) -> float:
    """k for space-independent coefficients:
    -(1/T) * integral_0^T (lam.A(t).lam - lam.q(t) + mu(t)) dt  (trapezoid)."""
    if not coeffs.space_independent:
        raise EigenError("closed form requires space-independent coefficients")
    g = coeffs.geometry
    lam = np.asarray(lam, dtype=float).reshape(-1)
    N = g.dimension
    ts = np.linspace(0.0, g.period, n_t + 1)
    origin = tuple(np.zeros_like(ts) for _ in range(N))
    vals = np.zeros_like(ts)
    for d in range(N):
        for j in range(N):
            if lam[d] == 0.0 or lam[j] == 0.0:
                continue
            a = np.broadcast_to(np.asarray(
                coeffs.A.eval_entry((d, j), ts, *origin), dtype=float), ts.shape)
            vals = vals + lam[d] * a * lam[j]
        if lam[d] != 0.0:
            qd = np.broadcast_to(np.asarray(
                coeffs.q.eval_entry(d, ts, *origin), dtype=float), ts.shape)
            vals = vals - lam[d] * qd
    vals = vals + np.broadcast_to(np.asarray(coeffs.mu(ts, *origin), dtype=float), ts.shape)
    return float(-np.trapezoid(vals, ts) / g.period)


def eigen_sandwich(coeffs: CoefficientSet, lam, phi: np.ndarray, grid: Grid, *,
                   family: Optional[ActionFamily] = None):
    """Bounds  min (L_lam phi)/phi <= k <= max (L_lam phi)/phi  for any
    positive periodic candidate phi (single level, or (n_t, npoints) levels
    whose time derivative is taken by centered differences)."""
    phi = np.asarray(phi, dtype=float)
    if np.min(phi) <= 0:
        raise PositivityError("sandwich candidate must be strictly positive")
    family = family or ActionFamily(coeffs, lam, grid)
    if phi.ndim == 1:
        r = -family.apply_action(0, phi) / phi
        return float(r.min()), float(r.max())
    n_t = grid.n_t
    if phi.shape[0] != n_t:
        raise ValueError(f"expected {n_t} time levels, got {phi.shape[0]}")
    lo, up = np.inf, -np.inf
    for m in range(n_t):
        dphi = (phi[(m + 1) % n_t] - phi[(m - 1) % n_t]) / (2 * grid.dt)
        r = (dphi - family.apply_action(m, phi[m])) / phi[m]
        lo = min(lo, float(r.min()))
        up = max(up, float(r.max()))
    return lo, up


def dk_dB_at_zero(coeffs: CoefficientSet, lam, eta: PeriodicField, grid: Grid,
                  pair: Optional[AdjointPair] = None) -> float:
    """Derivative of B -> k_lam(A, q, mu + B*eta) at B = 0:
    the weighted mean -integral eta * phi * phi_tilde over (0,T) x C."""
    pair = pair or adjoint_eigenpair(coeffs, lam, grid)
    n_t = grid.n_t
    tm = (np.arange(n_t) * grid.dt).reshape((-1,) + (1,) * grid.dimension)
    eta_vals = np.asarray(eta(tm, *grid.meshgrid()), dtype=float)
    eta_vals = np.broadcast_to(eta_vals, (n_t,) + tuple(grid.n_space)).reshape(n_t, -1)
    if pair.phi.ndim == 1:
        prod = pair.phi * pair.phi_tilde  # time-independent pair
        integrand = eta_vals @ prod
    else:
        integrand = np.sum(eta_vals * pair.phi * pair.phi_tilde, axis=1)
    return float(-grid.dt * grid.cell_measure() * np.sum(integrand))
