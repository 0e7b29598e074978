"""Dyadic radial quadrature, divergence detection and spherical caps."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from qgrowth.errors import ToleranceNotMet
from qgrowth.quadrature import (Verdict, adaptive_gk, ball_volume, cap_fraction, detect_divergence,
                                integrate_offcenter_ball, integrate_radial, sphere_area)


def test_ball_volume_and_area():
    assert ball_volume(4) == pytest.approx(math.pi**2 / 2)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@given(n=st.integers(2, 7), gap=st.floats(0.5, 1.9))
def test_power_law_integral_exact(n, gap):
    a = n - gap
    res = integrate_radial(lambda r: r ** (-a), 0.0, 1.0, n, 1e-10)
    exact = sphere_area(n) / (n - a)
    assert res.converged
    assert abs(res.value - exact) <= 1e-9 * exact


@given(n=st.integers(2, 7), gap=st.floats(0.05, 0.5))
def test_near_critical_power_law(n, gap):
    # r^{-a} overflows near r = e^{-88} in r-space form, so exponents this
    # close to n are passed as log-radius densities r^n h(r) = e^{gap s}
    res = integrate_radial(None, 0.0, 1.0, n, 1e-8, density=lambda s: np.exp(gap * s))
    exact = sphere_area(n) / gap
    assert res.converged
    assert abs(res.value - exact) <= 1e-7 * exact


@given(tol=st.sampled_from([1e-4, 1e-6, 1e-8, 1e-10]))
def test_tolerance_contract(tol):
    n = 4
    res = integrate_radial(lambda r: np.cos(np.log(r)) * r ** (-3.5), 0.0, 1.0, n, tol)
    exact = sphere_area(n) * 0.5 / (0.25 + 1.0)    # int_0^1 r^{1/2} cos(log r) dr
    assert res.converged
    assert abs(res.value - exact) <= max(tol * abs(exact), res.error_estimate) * 10


@pytest.mark.parametrize("n", [3, 4, 6])
def test_critical_power_is_divergent(n):
    res = integrate_radial(lambda r: r ** (-float(n)), 0.0, 1.0, n, 1e-8)
    assert res.verdict is Verdict.DIVERGENT
    inc = np.array(res.increments[:10])
    np.testing.assert_allclose(inc, sphere_area(n) * math.log(2), rtol=1e-10)


def test_log_divergence_is_divergent():
    # |x|^{-4} / log(1/|x|) in R^4, given as a log-radius density
    res = integrate_radial(None, 0.0, 0.5, 4, 1e-8, density=lambda s: 1.0 / (-s))
    assert res.verdict is Verdict.DIVERGENT


def test_log_divergence_never_converges_in_radius_form():
    # the r-space callable overflows near r = e^-177; the verdict may be
    # inconclusive but must never claim convergence
    try:
        res = integrate_radial(lambda r: r ** (-4.0) / np.log(1 / r), 0.0, 0.5, 4, 1e-8)
    except ToleranceNotMet:
        return
    assert res.verdict is not Verdict.CONVERGED


def test_detect_divergence_rules():
    assert detect_divergence([1.0] * 10).verdict is Verdict.DIVERGENT
    assert detect_divergence([0.5**k for k in range(12)], tol=1e-3).verdict is Verdict.CONVERGED
    assert detect_divergence([1.0] * 7 + [math.inf]).verdict is Verdict.DIVERGENT
    assert detect_divergence([1.0, 0.9, 1.1, 0.8, 1.2, 0.7, 1.0, 0.95]).verdict is Verdict.INCONCLUSIVE
    with pytest.raises(ValueError):
        detect_divergence([1.0, 0.5])


def test_adaptive_gk_against_scipy():
    f = lambda x: np.exp(-x) * np.sin(5 * x)
    val, err, _ = adaptive_gk(f, 0.0, 3.0, 1e-12)[:3]
    ref = integrate.quad(f, 0, 3, epsabs=1e-13)[0]
    assert abs(val - ref) < 1e-11


@given(n=st.integers(2, 6), d=st.floats(0.05, 1.5), r=st.floats(0.1, 1.0))
def test_cap_fraction_volume(n, d, r):
    # integrating the indicator reproduces the ball volume
    res = integrate_offcenter_ball(lambda rho: np.ones_like(rho), np.r_[d, np.zeros(n - 1)], r, n, 1e-9)
    assert res.value == pytest.approx(ball_volume(n) * r**n, rel=1e-7)


def test_cap_fraction_limits():
    rho = np.array([0.1, 0.5, 2.0, 5.0])
    out = cap_fraction(rho, 1.0, 1.5, 3)
    assert out[0] == 1.0 and out[-1] == 0.0
    # n = 3 has the closed form (r^2 - (rho - d)^2) / (4 rho d)
    np.testing.assert_allclose(out[2], (1.5**2 - 1.0) / (4 * 2.0), rtol=1e-12)


def test_offcenter_monte_carlo(rng):
    n, c, r = 3, np.array([0.4, 0.0, 0.0]), 0.5
    res = integrate_offcenter_ball(lambda rho: rho**-1.5, c, r, n, 1e-10)
    pts = c + r * rng.uniform(-1, 1, (400_000, 3))
    pts = pts[np.linalg.norm(pts - c, axis=1) < r]
    mc = ball_volume(3) * r**3 * np.mean(np.linalg.norm(pts, axis=1) ** -1.5)
    assert res.value == pytest.approx(mc, rel=2e-2)


def test_offcenter_tiny_offset_matches_centred():
    h = lambda r: np.exp(-r) * r**-1.2
    a = integrate_offcenter_ball(h, np.array([1e-14, 0.0, 0.0, 0.0]), 0.8, 4, 1e-12).value
    b = integrate_radial(h, 0.0, 0.8, 4, 1e-12).value
    assert a == pytest.approx(b, rel=1e-10)
