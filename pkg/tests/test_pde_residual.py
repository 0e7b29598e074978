"""Model-system residuals, weak identities, radial potentials."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.special import gamma

from qgrowth import field_kernel as fk
from qgrowth import pde_residual as pr
from qgrowth.bumps import Bump
from qgrowth.errors import FamilyMismatch, NonIntegrableSource, SupportError, UnsupportedDimension

RADII = np.geomspace(1e-6, math.exp(-2), 100)
CASES = [(pr.FOURTH_ORDER_LOGLOG, fk.loglog4d()),
         (pr.SECOND_ORDER_SPHERE, fk.sinlog_second(3)),
         (pr.SECOND_ORDER_SPHERE, fk.sinlog_second(4)),
         (pr.FOURTH_ORDER_SINLOG, fk.sinlog_fourth(5)),
         (pr.FOURTH_ORDER_SINLOG, fk.sinlog_fourth(6))]
IDS = [f"{f.family}-{f.n}" for _, f in CASES]


@pytest.mark.parametrize("name,f", CASES, ids=IDS)
def test_pointwise_residual(name, f):
    rep = pr.pointwise_residual(pr.SYSTEMS[name], f, RADII)
    assert rep.max_rel <= 1e-8
    assert len(rep.residual_rel) == 100


@pytest.mark.parametrize("name,f", CASES, ids=IDS)
@pytest.mark.parametrize("component", [0, 1])
def test_perturbation_is_detected(name, f, component):
    g = fk.perturbed(f, component, 1.01)
    assert pr.pointwise_residual(pr.SYSTEMS[name], g, RADII).max_rel > 1e-4


def test_residual_is_direction_independent():
    f = fk.sinlog_fourth(5)
    sys = pr.SYSTEMS[pr.FOURTH_ORDER_SINLOG]
    d = np.random.default_rng(3).normal(size=5)
    rep = pr.pointwise_residual(sys, f, RADII[::10], direction=d)
    assert rep.max_rel <= 1e-8


def test_family_mismatch():
    with pytest.raises(FamilyMismatch):
        pr.pointwise_residual(pr.SYSTEMS[pr.FOURTH_ORDER_LOGLOG], fk.sinlog_second(4), RADII)


def test_report_serialisation():
    rep = pr.pointwise_residual(pr.SYSTEMS[pr.SECOND_ORDER_SPHERE], fk.sinlog_second(3), RADII[:5])
    data = rep.to_json()
    assert set(data) >= {"family", "n", "radii", "residual_rel", "max_rel"}
    assert rep.to_csv().count("\n") == 6


def test_growth_constants():
    second = pr.growth_constant(pr.SYSTEMS[pr.SECOND_ORDER_SPHERE], fk.sinlog_second(4), RADII)
    assert second.verdict == pr.FINITE
    assert second.constant == pytest.approx(math.sqrt(2), rel=1e-10)
    fourth = pr.growth_constant(pr.SYSTEMS[pr.FOURTH_ORDER_SINLOG], fk.sinlog_fourth(6), RADII)
    assert fourth.verdict == pr.FINITE and math.isfinite(fourth.constant)
    assert fourth.decade_spread <= 0.05
    loglog = pr.growth_constant(pr.SYSTEMS[pr.FOURTH_ORDER_LOGLOG], fk.loglog4d(), RADII)
    assert loglog.verdict == pr.FINITE
    assert loglog.nested_spread <= 0.05
    assert loglog.constant <= math.sqrt(2) + 1e-9


def test_growth_not_applicable_for_zero_field():
    zero = fk.ChainProfile((("affine", 0.0, 0.0),))
    f = fk.FieldSpec(4, 2, fk.CUSTOM, {}, (zero, zero), r_max=math.exp(-2))
    rep = pr.growth_constant(pr.SYSTEMS[pr.SECOND_ORDER_SPHERE], f, RADII)
    assert rep.verdict == pr.NOT_APPLICABLE


def _bumps(n):
    return [Bump(n, math.exp(-3)), Bump(n, 0.05, center=(0.06,) + (0.0,) * (n - 1)),
            Bump(n, 0.05, center=(0.03, 0.02) + (0.0,) * (n - 2))]


@pytest.mark.parametrize("name,f", CASES, ids=IDS)
def test_weak_residual(name, f):
    order = pr.SYSTEMS[name].order
    for b in _bumps(f.n):
        w = pr.weak_residual(f, b, order, 1e-8)
        assert w.relative <= 1e-6
        assert w.residual <= max(w.error_bound, 1e-9 * w.scale) * 10


def test_weak_pairing_against_dblquad():
    f = fk.sinlog_fourth(5)
    n = 5
    b = Bump(n, 0.05, center=(0.06, 0, 0, 0, 0))
    w = pr.weak_residual(f, b, 4, 1e-10)
    d, rb = 0.06, 0.05
    area = 2 * math.pi ** ((n - 1) / 2) / gamma((n - 1) / 2)    # |S^{n-2}|

    def gmax(rho):
        c = (rho**2 + d**2 - rb**2) / (2 * rho * d)
        return math.acos(min(1.0, max(-1.0, c)))

    def integrand(g, rho, k):
        q = math.sqrt(max(rho**2 + d**2 - 2 * rho * d * math.cos(g), 0.0))
        lap_u = f.radial_quantity("lap", rho)[k]
        return lap_u * b.radial("lap", q) * rho ** (n - 1) * math.sin(g) ** (n - 2)

    for k in range(2):
        ref = integrate.dblquad(integrand, d - rb, d + rb, 0.0, gmax, args=(k,),
                                epsabs=1e-13, epsrel=1e-10)[0] * area
        assert w.lhs[k] == pytest.approx(ref, rel=1e-6, abs=1e-9 * abs(w.lhs[k]))


def test_weak_second_order_power_law():
    f = fk.power_law(2.0, 4)
    w = pr.weak_residual(f, Bump(4, 0.5, center=(0.2, 0, 0, 0)), 2, 1e-9)
    assert w.relative <= 1e-8


def test_weak_support_error():
    with pytest.raises(SupportError):
        pr.weak_residual(fk.loglog4d(), Bump(4, 0.2), 4)


def test_divergence_pairing():
    n = 4
    b = Bump(n, 0.8)
    a, c = pr.divergence_pairing(lambda r: r**-1.5, lambda r: -1.5 * r**-2.5, b, n, 1e-10)
    assert a == pytest.approx(c, rel=1e-8)


# -- potentials --------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 5])
def test_uniform_ball_potential(n):
    res = pr.newton_potential(Polynomial([1.0]), n, 2, support=1.0)
    v = res.profile
    r = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(v.value(r), 1 / (2 * (n - 2)) - r**2 / (2 * n), rtol=1e-9)
    r = np.array([1.5, 3.0])
    np.testing.assert_allclose(v.value(r), r ** (2 - n) / (n * (n - 2)), rtol=1e-9)


def test_uniform_ball_bipotential():
    res = pr.newton_potential(Polynomial([1.0]), 5, 4, support=1.0)
    w = res.profile
    r_in = np.array([0.2, 0.7])
    d = 1 / 35 + 1 / 60 - 1 / 280
    np.testing.assert_allclose(w.value(r_in), -r_in**2 / 60 + r_in**4 / 280 + d, rtol=1e-8)
    r_out = np.array([1.3, 4.0])
    np.testing.assert_allclose(w.value(r_out), 1 / (30 * r_out) - 1 / (210 * r_out**3), rtol=1e-8)


def test_zero_source():
    res = pr.newton_potential(Polynomial([0.0]), 4, 2)
    assert np.all(res.profile.value(np.array([0.1, 0.5, 2.0])) == 0.0)


@settings(max_examples=10)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 6))
def test_random_sources_invert(seed, n):
    coef = np.random.default_rng(seed).uniform(-1, 1, 4)
    res = pr.newton_potential(Polynomial(coef), n, 2)
    assert res.inversion_residual <= 1e-6


def test_source_without_decay_rejected():
    with pytest.raises(UnsupportedDimension):
        pr.newton_potential(Polynomial([1.0]), 4, 4)


def test_nonintegrable_source():
    with pytest.raises(NonIntegrableSource):
        pr.newton_potential(lambda r: r ** -3.0, 3, 2)


def test_power_law_source_gradient():
    # h = c r^{-2} in n = 5: v' = -c r^{-1} / 3 inside the support
    c = 0.3
    res = pr.newton_potential(lambda r: c * r**-2.0, 5, 2)
    jet = res.profile.jet_r(np.array([0.05, 0.3]))
    np.testing.assert_allclose(jet[1], -c / (3 * np.array([0.05, 0.3])), rtol=1e-7)


# -- Caccioppoli -------------------------------------------------------------


def test_caccioppoli_monotone_in_theta():
    corpus = fk.comparison_corpus("harmonic", 3, 3)
    thetas = [0.1, 0.2, 0.4, 0.8]
    for f in corpus:
        vals = [pr.caccioppoli_ratio(f, t) for t in thetas]
        if vals[0] is None:
            continue
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
    consts = pr.caccioppoli_constants(corpus, thetas)
    assert all(math.isfinite(v) for v in consts.values())
