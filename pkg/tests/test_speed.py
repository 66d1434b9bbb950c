import numpy as np
import pytest

from kppspeed.fields import CoefficientSet, PeriodicField
from kppspeed.operators import build_grid
from kppspeed.eigen import principal_eigenvalue
from kppspeed.speed import (
    NoSpreadingError,
    SpeedError,
    UnimodalityError,
    _check_unimodal,
    shear_full_coefficients,
    shear_reduced_eigenvalue,
    shear_speed,
    speed_x_independent,
    spreading_speed,
)


def coeffs(A="1", q=None, mu="1", T=1.0, L=1.0):
    return CoefficientSet.from_expressions(A=A, q=q, mu=mu, T=T, L=L)


def test_homogeneous_speed():
    cs = coeffs()
    r = spreading_speed(cs, [1.0], build_grid(cs.geometry, 256))
    assert r.c_star == pytest.approx(2.0, abs=1e-4)
    assert r.lam_star[0] < 0
    assert r.eigen is not None and r.eigen.lower <= r.eigen.k <= r.eigen.upper
    assert all(v >= r.c_star - 1e-8 for _, v in r.profile)


def test_constant_drift_speed():
    cs = coeffs(q="1")
    r = spreading_speed(cs, [1.0], build_grid(cs.geometry, 256))
    assert r.c_star == pytest.approx(3.0, abs=1e-3)


def test_periodic_mu_strictly_faster_and_grid_consistent():
    cs = coeffs(mu="1 + 0.5*cos(2*pi*x)")
    r256 = spreading_speed(cs, [1.0], build_grid(cs.geometry, 256))
    r512 = spreading_speed(cs, [1.0], build_grid(cs.geometry, 512))
    assert r256.c_star > 2.0
    assert abs(r256.c_star - r512.c_star) <= 1e-3


def test_no_spreading_reported():
    cs = coeffs(mu="-1")
    with pytest.raises(NoSpreadingError):
        spreading_speed(cs, [1.0], build_grid(cs.geometry, 64))
    with pytest.raises(NoSpreadingError):
        speed_x_independent(cs, [1.0])


def test_speed_x_independent_examples():
    assert speed_x_independent(coeffs(), [1.0]).c_star == pytest.approx(2.0, abs=1e-12)
    assert speed_x_independent(coeffs(q="1"), [1.0]).c_star == pytest.approx(3.0, abs=1e-12)
    r = speed_x_independent(coeffs(A="2 + cos(2*pi*t)"), [1.0])
    assert r.c_star == pytest.approx(2 * np.sqrt(2.0), abs=1e-10)
    with pytest.raises(SpeedError):
        speed_x_independent(coeffs(mu="1 + 0.5*cos(2*pi*x)"), [1.0])


def test_closed_form_agrees_with_floquet_ray_search():
    cs = coeffs(A="2 + cos(2*pi*t)")
    closed = speed_x_independent(cs, [1.0])
    ray = spreading_speed(cs, [1.0], build_grid(cs.geometry, 32, 512), route="floquet")
    assert abs(closed.c_star - ray.c_star) <= 1e-3


def test_homogeneous_route_consistency():
    cs = coeffs(A="1.3", q="0.4", mu="0.9")
    a, q0, mu0 = 1.3, 0.4, 0.9
    expected = 2 * np.sqrt(mu0 * a) + q0
    ray = spreading_speed(cs, [1.0], build_grid(cs.geometry, 128)).c_star
    closed = speed_x_independent(cs, [1.0]).c_star
    assert ray == pytest.approx(expected, abs=1e-3)
    assert closed == pytest.approx(expected, abs=1e-12)


def test_growth_shift_speeds_up():
    base = coeffs(mu="1 + 0.5*cos(2*pi*x)")
    boosted = coeffs(mu="1.3 + 0.5*cos(2*pi*x)")
    g = build_grid(base.geometry, 256)
    assert (spreading_speed(boosted, [1.0], g).c_star
            > spreading_speed(base, [1.0], g).c_star)


def test_unimodality_guard():
    _check_unimodal([(0.5, 3.0), (1.0, 2.0), (2.0, 2.5), (4.0, 3.5)])
    with pytest.raises(UnimodalityError):
        _check_unimodal([(0.5, 3.0), (1.0, 2.0), (2.0, 2.5), (4.0, 2.2)])


def test_2d_ray_and_refinement_match_on_isotropic_medium():
    cs = CoefficientSet.from_expressions(A="1", mu="1", L=(1.0, 1.0))
    g = build_grid(cs.geometry, (24, 24))
    r = spreading_speed(cs, [1.0, 0.0], g, refine=True)
    assert r.c_star == pytest.approx(2.0, abs=1e-3)
    assert r.diagnostics["c_star_ray"] == pytest.approx(r.c_star, abs=1e-6)


def test_shear_trivial_reduces_to_homogeneous():
    geo = coeffs().geometry
    a = PeriodicField.scalar("1", geo)
    q1 = PeriodicField.scalar("0", geo)
    mu = PeriodicField.scalar("1", geo)
    r = shear_speed(a, q1, mu, [1.0, 0.0], build_grid(geo, 128))
    assert r.c_star == pytest.approx(2.0, abs=1e-4)


def test_shear_speedup_is_monotone_in_amplitude():
    geo = coeffs().geometry
    a = PeriodicField.scalar("1", geo)
    mu = PeriodicField.scalar("1", geo)
    g = build_grid(geo, 128)
    vals = []
    for B in (0.0, 1.0, 2.0, 4.0):
        q1 = PeriodicField.scalar(f"{B}*cos(2*pi*x)", geo)
        vals.append(shear_speed(a, q1, mu, [1.0, 0.0], g).c_star)
    assert all(b > a_ + 1e-4 for a_, b in zip(vals, vals[1:]))


def test_shear_reduced_matches_full_2d_eigenvalue():
    geo = coeffs().geometry
    a = PeriodicField.scalar("1", geo)
    q1 = PeriodicField.scalar("cos(2*pi*x)", geo)
    mu = PeriodicField.scalar("1", geo)
    red = shear_reduced_eigenvalue(a, q1, mu, [1.0, 0.0], 0.7, build_grid(geo, 64))
    full_cs = shear_full_coefficients(a, q1, mu)
    full = principal_eigenvalue(full_cs, [0.7, 0.0], build_grid(full_cs.geometry, (64, 64)))
    assert abs(red.k - full.k) <= 1e-5


def test_potential_drift_never_beats_homogeneous():
    from kppspeed.fields import gradient_drift
    geo = coeffs().geometry
    Q = PeriodicField.scalar("0.3*cos(2*pi*x)", geo)
    q, _ = gradient_drift(Q)
    g = build_grid(geo, 512)
    base = CoefficientSet(PeriodicField.matrix("1", geo), q,
                          PeriodicField.scalar("1", geo), geo)
    for B in (1.0, 2.0, 5.0):
        cs = base.with_scaled(drift_B=B)
        assert spreading_speed(cs, [1.0], g).c_star <= 2.0 + 1e-6
