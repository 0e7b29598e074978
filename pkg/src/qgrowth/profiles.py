"""Univariate radial profiles built from chains of elementary functions.

A radial scalar ``g(|x|)`` is stored as a function ``F`` of the log-radius
``s = log|x|``, written as a left-to-right chain of elementary maps applied to
``s``.  Derivatives with respect to ``s`` are propagated exactly through the
chain with Faa di Bruno's formula up to order four.  Working in ``s`` keeps
every quantity finite for radii far below the float underflow threshold,
which the origin-tail integrals rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_ORDER = 4

# (k, j) signed Stirling numbers of the first kind: r^k d^k/dr^k = sum_j s1 d^j/ds^j
_STIRLING1 = {
    1: (1.0,),
    2: (-1.0, 1.0),
    3: (2.0, -3.0, 1.0),
    4: (-6.0, 11.0, -6.0, 1.0),
}
# Stirling numbers of the second kind: d^k/ds^k = sum_j S2 r^j d^j/dr^j
_STIRLING2 = {
    1: (1.0,),
    2: (1.0, 1.0),
    3: (1.0, 3.0, 1.0),
    4: (1.0, 7.0, 6.0, 1.0),
}

_OPS = ("affine", "log", "exp", "sin", "cos", "pow")


def _outer_derivatives(op: str, params: tuple, g: np.ndarray) -> list[np.ndarray]:
    """Values f(g), f'(g), ..., f''''(g) of one elementary map."""
    if op == "affine":
        a, b = params
        z = np.zeros_like(g)
        return [a * g + b, np.full_like(g, a), z, z, z]
    if op == "log":
        return [np.log(g), 1.0 / g, -1.0 / g**2, 2.0 / g**3, -6.0 / g**4]
    if op == "exp":
        e = np.exp(g)
        return [e, e, e, e, e]
    if op == "sin":
        s, c = np.sin(g), np.cos(g)
        return [s, c, -s, -c, s]
    if op == "cos":
        s, c = np.sin(g), np.cos(g)
        return [c, -s, -c, s, c]
    if op == "pow":
        (a,) = params
        out = []
        coef = 1.0
        for k in range(MAX_ORDER + 1):
            out.append(coef * g ** (a - k))
            coef *= a - k
        return out
    raise ValueError(f"unknown profile op {op!r}")


def compose(inner: np.ndarray, fd: Sequence[np.ndarray]) -> np.ndarray:
    """Jet of ``f(g(s))`` from the jet of ``g`` and the derivatives of ``f`` at ``g``."""
    g1, g2, g3, g4 = inner[1], inner[2], inner[3], inner[4]
    out = np.empty_like(inner)
    out[0] = fd[0]
    out[1] = fd[1] * g1
    out[2] = fd[2] * g1**2 + fd[1] * g2
    out[3] = fd[3] * g1**3 + 3.0 * fd[2] * g1 * g2 + fd[1] * g3
    out[4] = (fd[4] * g1**4 + 6.0 * fd[3] * g1**2 * g2
              + fd[2] * (3.0 * g2**2 + 4.0 * g1 * g3) + fd[1] * g4)
    return out


def _interval_image(op: str, params: tuple, lo: float, hi: float) -> tuple[float, float]:
    if op == "affine":
        a, b = params
        if a == 0:
            return b, b
        ends = sorted((a * lo + b, a * hi + b))
        return ends[0], ends[1]
    if op == "log":
        return (-math.inf if lo <= 0 else math.log(lo)), math.log(hi)
    if op == "exp":
        return math.exp(lo) if lo > -math.inf else 0.0, math.exp(hi) if hi < math.inf else math.inf
    if op == "pow":
        (a,) = params
        vals = [_safe_pow(lo, a), _safe_pow(hi, a)]
        return min(vals), max(vals)
    if op in ("sin", "cos"):
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo >= 2 * math.pi:
            return -1.0, 1.0
        fn = math.sin if op == "sin" else math.cos
        shift = math.pi / 2 if op == "sin" else 0.0
        vals = [fn(lo), fn(hi)]
        # extrema of sin sit at pi/2 + k pi, of cos at k pi
        k = math.ceil((lo - shift) / math.pi)
        while shift + k * math.pi <= hi:
            vals.append(fn(shift + k * math.pi))
            k += 1
        return min(vals), max(vals)
    raise ValueError(f"unknown profile op {op!r}")


def _safe_pow(x: float, a: float) -> float:
    if x == 0:
        return 0.0 if a > 0 else math.inf
    if math.isinf(x):
        return math.inf if a > 0 else 0.0
    return x**a


@dataclass(frozen=True)
class ChainProfile:
    """Radial profile ``F(s)`` given as a chain of ops applied to ``s = log r``.

    ``ops`` is a tuple of ``(name, *params)`` tuples, applied first to last.
    An empty chain is the identity ``F(s) = s`` (that is, ``log r``).
    """

    ops: tuple[tuple, ...]

    def __post_init__(self):
        for op in self.ops:
            if op[0] not in _OPS:
                raise ValueError(f"unknown profile op {op[0]!r}")

    def jet_s(self, s, order: int = MAX_ORDER) -> np.ndarray:
        """Derivatives ``d^k F / ds^k`` for k = 0..4, shape ``(5,) + s.shape``."""
        s = np.asarray(s, dtype=float)
        jet = np.zeros((MAX_ORDER + 1,) + s.shape)
        jet[0] = s
        jet[1] = 1.0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for name, *params in self.ops:
                jet = compose(jet, _outer_derivatives(name, tuple(params), jet[0]))
        return jet

    def value(self, r) -> np.ndarray:
        return self.jet_s(np.log(np.asarray(r, dtype=float)))[0]

    def range_on(self, r_lo: float, r_hi: float) -> tuple[float, float]:
        """Exact image of the radial interval ``[r_lo, r_hi]`` (``r_lo`` may be 0)."""
        lo = -math.inf if r_lo <= 0 else math.log(r_lo)
        hi = math.log(r_hi)
        for name, *params in self.ops:
            lo, hi = _interval_image(name, tuple(params), lo, hi)
        return lo, hi

    def then(self, *ops: tuple) -> "ChainProfile":
        return ChainProfile(self.ops + tuple(ops))

    def to_json(self) -> list:
        return [list(op) for op in self.ops]

    @classmethod
    def from_json(cls, data) -> "ChainProfile":
        return cls(tuple(tuple(op) for op in data))


def scaled_r_jet(fjet: np.ndarray) -> np.ndarray:
    """``r^k g^{(k)}(r)`` for k = 0..4 from the log-radius jet of ``F``."""
    out = np.empty_like(fjet)
    out[0] = fjet[0]
    for k, coefs in _STIRLING1.items():
        out[k] = sum(c * fjet[j + 1] for j, c in enumerate(coefs))
    return out


def s_jet_from_scaled(rjet: np.ndarray) -> np.ndarray:
    """Inverse of :func:`scaled_r_jet`."""
    out = np.empty_like(rjet)
    out[0] = rjet[0]
    for k, coefs in _STIRLING2.items():
        out[k] = sum(c * rjet[j + 1] for j, c in enumerate(coefs))
    return out


def scaled_laplacian(fjet: np.ndarray, n: int) -> np.ndarray:
    """``r^2 * Laplacian`` of a radial function, with its first two s-derivatives.

    Returns an array shaped like ``fjet[:3]``: entry k is ``d^k/ds^k`` of
    ``G = F'' + (n - 2) F'``.
    """
    return np.stack([fjet[k + 2] + (n - 2) * fjet[k + 1] for k in range(3)])


def scaled_bilaplacian(fjet: np.ndarray, n: int) -> np.ndarray:
    """``r^4 * Bilaplacian`` of a radial function."""
    g = scaled_laplacian(fjet, n)
    return g[2] + (n - 6) * g[1] + (8 - 2 * n) * g[0]


def radial_tensor_coefficients(fjet: np.ndarray) -> np.ndarray:
    """Coefficients of the Cartesian derivative tensors of ``F(log|x|)``.

    With ``q = |x|^2 / 2`` and ``H(q) = F(s)`` one has
    ``r^{2k} H^{(k)} = A_k`` where the returned array holds ``A_1..A_4``.
    """
    f1, f2, f3, f4 = fjet[1], fjet[2], fjet[3], fjet[4]
    return np.stack([
        f1,
        f2 - 2.0 * f1,
        f3 - 6.0 * f2 + 8.0 * f1,
        f4 - 12.0 * f3 + 44.0 * f2 - 48.0 * f1,
    ])
