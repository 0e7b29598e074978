"""Field catalogue: jets, rotation invariance, corpus validity, kernels."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import special_ortho_group

from qgrowth import field_kernel as fk
from qgrowth import polynomials as P
from qgrowth.bumps import Bump
from qgrowth.errors import DomainError, FamilyMismatch, UnsupportedDimension
from qgrowth.quadrature import integrate_radial


def _catalog():
    return [fk.loglog4d(), fk.sinlog_second(3), fk.sinlog_second(4), fk.sinlog_fourth(5),
            fk.sinlog_fourth(6), fk.power_law(0.7, 4)]


@pytest.mark.parametrize("f", _catalog(), ids=lambda f: f"{f.family}-{f.n}")
def test_radial_jet_matches_finite_differences(f):
    for r in (1e-4, 3e-3, 0.1):
        h = 1e-4 * r
        for k in range(f.K):
            jet = fk.radial_jet(f, k, r)
            val = lambda t: f.values(np.r_[t, np.zeros(f.n - 1)][None])[0, k]
            d1 = (val(r + h) - val(r - h)) / (2 * h)
            d2 = (val(r + h) - 2 * val(r) + val(r - h)) / h**2
            assert abs(d1 - jet.d1) <= 1e-6 * (abs(jet.d1) + abs(jet.d0) / r)
            assert abs(d2 - jet.d2) <= 1e-4 * (abs(jet.d2) + abs(jet.d1) / r + abs(jet.d0) / r**2)


@pytest.mark.parametrize("f", _catalog(), ids=lambda f: f"{f.family}-{f.n}")
def test_eval_jet_consistent_with_radial_quantities(f):
    x = np.linspace(0.01, 0.02, f.n)
    jb = fk.eval_jet(f, x, order=4)
    r = np.linalg.norm(x)
    np.testing.assert_allclose(np.linalg.norm(jb.gradient), f.radial_quantity("grad", r), rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(jb.hessian), f.radial_quantity("hess", r), rtol=1e-12)
    np.testing.assert_allclose(jb.laplacian, f.radial_quantity("lap", r), rtol=1e-10)
    np.testing.assert_allclose(jb.bilaplacian, f.radial_quantity("bilap", r), rtol=1e-9)


@given(seed=st.integers(0, 2**31 - 1))
def test_rotation_invariance(seed):
    f = fk.sinlog_fourth(5)
    rot = special_ortho_group.rvs(5, random_state=seed)
    x = np.random.default_rng(seed).uniform(-0.05, 0.05, 5)
    a, b = fk.eval_jet(f, x, 4), fk.eval_jet(f, rot @ x, 4)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(a.gradient, axis=1), np.linalg.norm(b.gradient, axis=1),
                               rtol=1e-10)
    np.testing.assert_allclose(a.bilaplacian, b.bilaplacian, rtol=1e-8)


def test_singular_fields_have_unit_norm_or_bounded_values():
    for f in (fk.sinlog_second(4), fk.sinlog_fourth(6)):
        pts = np.random.default_rng(0).uniform(-0.1, 0.1, (50, f.n))
        np.testing.assert_allclose(np.linalg.norm(f.values(pts), axis=1), 1.0, rtol=1e-13)


def test_domain_errors():
    with pytest.raises(DomainError):
        fk.RadialJet(0.0, 1, 1, 1, 1, 1)
    with pytest.raises(UnsupportedDimension):
        fk.catalog_field(fk.LOGLOG4D, 5)
    with pytest.raises(UnsupportedDimension):
        fk.fundamental_solution(4, 4)
    with pytest.raises(FamilyMismatch):
        fk.linear_field(3).radial_s_jets(np.array(0.0))


@pytest.mark.parametrize("kind", ["harmonic", "biharmonic"])
def test_comparison_corpus_is_exact(kind):
    corpus = fk.comparison_corpus(kind, 5, 4)
    assert len(corpus) > 20
    for f in corpus:
        lap = P.laplacian(f.polys[0], 5)
        if kind == "biharmonic":
            lap = P.laplacian(lap, 5)
        assert not lap
        assert P.degree(f.polys[0]) <= 4


def test_laplace_kernel_flux():
    # -int Phi Lap phi = phi(0) for a centred bump
    for n in (3, 4, 5):
        phi = fk.fundamental_solution(n, 2)
        bump = Bump(n, 0.7)
        c = phi.params["constant"]
        res = integrate_radial(lambda r: -c * r ** (2 - n) * bump.radial("lap", r), 0.0, 0.7, n, 1e-12)
        assert res.value == pytest.approx(bump.at_zero(), rel=1e-9)


def test_bilaplace_calibration_matches_closed_form():
    for n in (5, 6, 7):
        cal = fk.calibrate_bilaplace_constant(n)
        assert cal.constant == pytest.approx(fk.bilaplace_constant_formula(n), rel=1e-9)
        assert cal.residual < 1e-6


def test_json_round_trip():
    for f in [fk.linear_field(4), fk.comparison_corpus("harmonic", 3, 2)[-1]]:
        g = fk.field_from_json(f.to_json())
        pts = np.random.default_rng(1).normal(size=(5, f.n))
        np.testing.assert_allclose(g.values(pts), f.values(pts))
