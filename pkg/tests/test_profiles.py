"""Log-radius jets: finite-difference agreement and exact interval images."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgrowth import field_kernel as fk
from qgrowth.profiles import ChainProfile, scaled_bilaplacian, scaled_laplacian


def _fd(fun, s, k, h=1e-2):
    """Centred 4th-order-accurate finite difference of order k (k = 1, 2)."""
    if k == 1:
        return (-fun(s + 2 * h) + 8 * fun(s + h) - 8 * fun(s - h) + fun(s - 2 * h)) / (12 * h)
    return (-fun(s + 2 * h) + 16 * fun(s + h) - 30 * fun(s) + 16 * fun(s - h) - fun(s - 2 * h)) / (12 * h * h)


PROFILES = [
    ChainProfile(()),
    ChainProfile((("affine", -1.0, 0.0), ("log",), ("sin",))),
    ChainProfile((("affine", -2.0, 0.0), ("cos",))),
    ChainProfile((("affine", -1.0, 0.0), ("log",), ("pow", 1.5))),
    ChainProfile((("affine", 1.5, 0.0), ("exp",))),
]


@pytest.mark.parametrize("prof", PROFILES)
@given(s=st.floats(-12.0, -2.5))
def test_jet_matches_finite_differences(prof, s):
    jet = prof.jet_s(np.array(s))
    for k in range(1, 5):
        below = lambda t: prof.jet_s(np.array(t))[k - 1]
        fd = _fd(below, s, 1, h=1e-3)
        assert abs(fd - jet[k]) <= 1e-6 * (1 + abs(jet[k]))


def test_identity_chain_is_log():
    s = np.linspace(-5, -1, 7)
    jet = ChainProfile(()).jet_s(s)
    np.testing.assert_allclose(jet[0], s)
    np.testing.assert_allclose(jet[1], 1.0)
    np.testing.assert_allclose(jet[2:], 0.0)


def test_unknown_op_rejected():
    with pytest.raises(ValueError):
        ChainProfile((("tan",),))


def test_scaled_laplacian_of_power_law():
    # r^a has r^2 Lap = a (a + n - 2) r^a
    n, a = 5, 1.7
    prof = ChainProfile((("affine", a, 0.0), ("exp",)))
    s = np.linspace(-4, -1, 5)
    lap = scaled_laplacian(prof.jet_s(s), n)[0]
    np.testing.assert_allclose(lap, a * (a + n - 2) * np.exp(a * s), rtol=1e-13)
    bilap = scaled_bilaplacian(prof.jet_s(s), n)
    expect = a * (a + n - 2) * (a - 2) * (a + n - 4) * np.exp(a * s)
    np.testing.assert_allclose(bilap, expect, rtol=1e-12)


@given(lo=st.floats(1e-9, 1e-3), width=st.floats(1.0, 1e4))
def test_range_on_contains_samples(lo, width):
    prof = ChainProfile((("affine", -2.0, 0.0), ("sin",)))
    hi = min(lo * width, 0.13)
    a, b = prof.range_on(lo, hi)
    r = np.geomspace(lo, hi, 200)
    v = prof.value(r)
    assert np.all(v >= a - 1e-12) and np.all(v <= b + 1e-12)


def test_range_on_origin_is_full_oscillation():
    f = fk.sinlog_second(4)
    for prof in f.profiles:
        a, b = prof.range_on(0.0, 1e-8)
        assert a == pytest.approx(-1.0) and b == pytest.approx(1.0)
