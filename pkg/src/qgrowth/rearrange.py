"""Distribution functions, decreasing rearrangements and Lorentz norms.

Empirical inputs are weighted sample sets: a finite list of values ``|f|``
with the measure each value occupies.  For such a piecewise-constant
function everything is exact up to floating point: ``f*`` is a step
function, ``f**`` is a prefix-sum average, and the ``q = inf`` supremum of
``t^{1/p} f**(t)`` is attained at a knot (between knots the function is
``A t^{1/p - 1} + v t^{1/p}`` with ``A >= 0``, which has no interior maximum).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, EmptyInput, LorentzIndexError
from .quadrature import Verdict, ball_volume, detect_divergence

EXACT_RADIAL = "exact-radial"
EMPIRICAL = "empirical"
DIVERGENCE_CEILING = 1e12


@dataclass
class WeightedSampleSet:
    """Values ``|f(x)|`` with the measure each one occupies.

    ``coarse`` optionally holds the same function sampled at half the
    resolution; Lorentz norms use it to report a refinement error bound.
    """

    values: np.ndarray
    weights: np.ndarray
    coarse: "WeightedSampleSet | None" = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.values.shape != self.weights.shape:
            raise ValueError("values and weights must have the same length")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("sample values must be finite absolute values |f(x)|")
        if np.any(self.weights <= 0):
            raise ValueError("sample weights must be positive")

    @property
    def total_measure(self) -> float:
        return math.fsum(self.weights)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def from_pairs(cls, pairs) -> "WeightedSampleSet":
        pairs = list(pairs)
        return cls(np.array([v for v, _ in pairs]), np.array([w for _, w in pairs]))


@dataclass
class RearrangementCurve:
    """Step function ``f*`` (value ``fstar[i]`` on ``(knots[i-1], knots[i]]``) and ``f**`` at the knots."""

    knots: np.ndarray
    fstar: np.ndarray
    fstarstar: np.ndarray
    coarse: "RearrangementCurve | None" = None

    @property
    def total_measure(self) -> float:
        return float(self.knots[-1]) if self.knots.size else 0.0

    @property
    def integral(self) -> float:
        """``int_0^inf f*(s) ds``."""
        return float(self.fstarstar[-1] * self.knots[-1]) if self.knots.size else 0.0

    def fstar_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="left")
        padded = np.append(self.fstar, 0.0)
        return np.where(t <= 0, padded[0], padded[np.minimum(idx, self.fstar.size)])

    def fstarstar_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        prefix = np.concatenate([[0.0], self.fstarstar * self.knots])
        starts = np.concatenate([[0.0], self.knots])
        idx = np.minimum(np.searchsorted(self.knots, t, side="left"), self.fstar.size)
        val = np.append(self.fstar, 0.0)[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (prefix[idx] + val * (t - starts[idx])) / t
        return np.where(t <= 0, self.fstar[0] if self.fstar.size else 0.0, out)

    def distribution(self, lam: float) -> float:
        """Lebesgue measure of ``{t : f*(t) > lam}``."""
        above = self.fstar > lam
        if not np.any(above):
            return 0.0
        return float(self.knots[np.nonzero(above)[0][-1]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "fstar", "fstarstar"])
        for row in zip(self.knots, self.fstar, self.fstarstar):
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@dataclass
class LorentzNormResult:
    p: float
    q: float
    value: float
    error_bound: float
    method: str
    divergent: bool = False
    detail: str = ""

    def to_json(self) -> dict:
        return {"p": self.p, "q": "inf" if math.isinf(self.q) else self.q,
                "value": None if self.divergent else self.value,
                "error_bound": None if self.divergent else self.error_bound,
                "method": self.method, "divergent": self.divergent, "detail": self.detail}


def distribution_function(samples: WeightedSampleSet, lam: float) -> float:
    """``D_f(lam)``: total weight of the entries with value strictly above ``lam``."""
    if lam < 0:
        raise ValueError("level must be nonnegative")
    return math.fsum(samples.weights[samples.values > lam])


def decreasing_rearrangement(samples: WeightedSampleSet) -> RearrangementCurve:
    """Right-continuous generalised inverse of the empirical distribution function.

    Entries are stably sorted by value, descending; tied values are merged
    into one flat segment.
    """
    if len(samples) == 0:
        raise EmptyInput("cannot rearrange an empty sample set")
    order = np.argsort(-samples.values, kind="stable")
    v, w = samples.values[order], samples.weights[order]
    starts = np.concatenate([[True], v[1:] != v[:-1]])
    seg = np.cumsum(starts) - 1
    vals = v[starts]
    wts = np.bincount(seg, weights=w)
    knots = np.cumsum(wts)
    prefix = np.cumsum(vals * wts)
    coarse = decreasing_rearrangement(samples.coarse) if samples.coarse is not None else None
    return RearrangementCurve(knots, vals, prefix / knots, coarse)


def _check_indices(p: float, q: float):
    if not (1 < p < math.inf):
        raise LorentzIndexError(f"primary index must satisfy 1 < p < inf, got {p}")
    if not q >= 1:
        raise LorentzIndexError(f"secondary index must satisfy 1 <= q <= inf, got {q}")


_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)


def _curve_norm(curve: RearrangementCurve, p: float, q: float) -> tuple[float, float]:
    """Norm of a step rearrangement and the quadrature error of the ``q < inf`` integral."""
    t, v, fss = curve.knots, curve.fstar, curve.fstarstar
    if t.size == 0 or v[0] == 0:
        return 0.0, 0.0
    # the norm is homogeneous: normalise by f*(0+) so that powers cannot underflow
    scale = v[0]
    v, fss = v / scale, fss / scale
    value, err = _normalised_curve_norm(t, v, fss, p, q)
    return value * scale, err * scale


def _normalised_curve_norm(t, v, fss, p: float, q: float) -> tuple[float, float]:
    if math.isinf(q):
        return float(np.max(t ** (1.0 / p) * fss)), 0.0
    prefix = fss * t
    total_first = v[0] ** q * t[0] ** (q / p) * p / q
    T, P_tot = t[-1], prefix[-1]
    tail = P_tot**q * T ** (q / p - q) / (q * (1.0 - 1.0 / p))
    if t.size == 1:
        return (total_first + tail) ** (1.0 / q), 0.0
    lo, hi = t[:-1], t[1:]
    A = prefix[:-1] - v[1:] * lo
    vi = v[1:]
    a, b = np.log(lo), np.log(hi)

    def seg_integral(rule):
        x, wq = rule
        u = 0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (b + a)[:, None]
        tt = np.exp(u)
        g = (A[:, None] * tt ** (1.0 / p - 1.0) + vi[:, None] * tt ** (1.0 / p)) ** q
        return 0.5 * (b - a) * (g @ wq)
    hi_rule = seg_integral(_GL_HI)
    lo_rule = seg_integral(_GL_LO)
    middle = math.fsum(hi_rule)
    total = total_first + middle + tail
    quad_err = math.fsum(np.abs(hi_rule - lo_rule))
    value = total ** (1.0 / q)
    return value, value * quad_err / (q * total)


def lorentz_norm(curve: RearrangementCurve, p: float, q: float) -> LorentzNormResult:
    """``||f||_{L^{p,q}}`` of an empirical rearrangement.

    ``error_bound`` is the change against the half-resolution curve (when the
    samples carried one) plus the quadrature error of the ``dt/t`` integral.
    """
    _check_indices(p, q)
    value, quad_err = _curve_norm(curve, p, q)
    refine = 0.0
    if curve.coarse is not None:
        refine = abs(value - _curve_norm(curve.coarse, p, q)[0])
    return LorentzNormResult(p, q, float(value), float(refine + quad_err), EMPIRICAL)


def lebesgue_norm(samples: WeightedSampleSet, p: float) -> float:
    """Exact ``L^p`` norm of a weighted sample set."""
    if math.isinf(p):
        return float(samples.values.max())
    scale = float(samples.values.max())
    if scale == 0:
        return 0.0
    return scale * math.fsum((samples.values / scale) ** p * samples.weights) ** (1.0 / p)


def powerlaw_lorentz_norm(n: int, s: float, p: float, q: float, radius: float = math.inf,
                          coefficient: float = 1.0) -> LorentzNormResult:
    """Exact ``L^{p,q}`` norm of ``c |x|^{-s}`` on ``B_radius`` (all of R^n by default).

    On ``(0, T]`` with ``T = b_n R^n`` one has ``f* = c (b_n / t)^{s/n}``,
    ``t^{1/p} f** = K t^beta`` with ``K = c n / (n - s) b_n^{s/n}`` and
    ``beta = 1/p - s/n``; beyond ``T`` the average decays like ``1/t``.
    Divergent cases are detected from the dyadic-in-``t`` partial sums.
    """
    _check_indices(p, q)
    if not 0 < s < n:
        raise ValueError("need 0 < s < n")
    b = ball_volume(n)
    K = coefficient * n / (n - s) * b ** (s / n)
    beta = 1.0 / p - s / n
    T = b * radius**n if math.isfinite(radius) else math.inf
    if math.isinf(q):
        if abs(beta) < 1e-15:
            return LorentzNormResult(p, q, K, 0.0, EXACT_RADIAL)
        if beta > 0 and math.isfinite(T):
            return LorentzNormResult(p, q, K * T**beta, 0.0, EXACT_RADIAL)
        return LorentzNormResult(p, q, math.inf, math.inf, EXACT_RADIAL, True,
                                 "t^(1/p) f** unbounded")
    # dyadic blocks in t towards 0 (and towards infinity when unbounded)
    t_ref = T if math.isfinite(T) else 1.0

    def block(lo, hi):
        if abs(beta) < 1e-15:
            return K**q * math.log(hi / lo)
        return K**q * (hi ** (q * beta) - lo ** (q * beta)) / (q * beta)
    towards_zero = [block(t_ref * 2.0 ** (-k - 1), t_ref * 2.0 ** (-k)) for k in range(64)]
    verdict = detect_divergence(towards_zero, 0.0, rebin_at=None)
    if verdict.verdict is Verdict.DIVERGENT or math.fsum(towards_zero) > DIVERGENCE_CEILING:
        return LorentzNormResult(p, q, math.inf, math.inf, EXACT_RADIAL, True,
                                 "dyadic partial sums towards t = 0: " + verdict.detail)
    if not math.isfinite(T):
        outward = [block(2.0**k, 2.0 ** (k + 1)) for k in range(64)]
        return LorentzNormResult(p, q, math.inf, math.inf, EXACT_RADIAL, True,
                                 "dyadic partial sums towards t = inf: "
                                 + detect_divergence(outward, 0.0, rebin_at=None).detail)
    head = K**q * T ** (q * beta) / (q * beta)
    P_tot = coefficient * b ** (s / n) * T ** (1.0 - s / n) / (1.0 - s / n)
    tail = P_tot**q * T ** (q / p - q) / (q * (1.0 - 1.0 / p))
    return LorentzNormResult(p, q, (head + tail) ** (1.0 / q), 0.0, EXACT_RADIAL)


def _log_edges(r_lo: float, r_hi: float, cells: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(r_lo), math.log(r_hi), cells + 1))


def sample_radial(scalar: Callable, n: int, radius: float, inner: float = 0.0, *,
                  cells: int = 2**14, floor: float = 1e-8, center=None,
                  with_coarse: bool = True) -> WeightedSampleSet:
    """Sample a radial scalar ``g(|x|)`` on an origin-centred ball or annulus.

    Log-spaced cells ``[r_i, r_{i+1}]`` each contribute ``g`` at the
    geometric midpoint with weight ``b_n (r_{i+1}^n - r_i^n)``.  For a ball
    the innermost ``floor * radius`` ball is one extra cell, valued at the
    radius that halves its volume.  ``coarse`` is the same construction with
    half as many cells.
    """
    if center is not None and np.any(np.asarray(center, dtype=float) != 0):
        raise DomainError("sample_radial needs an origin-centred domain; use sample_grid")
    if not 0 <= inner < radius:
        raise DomainError(f"need 0 <= inner < radius, got {inner}, {radius}")
    b = ball_volume(n)
    r_lo = inner if inner > 0 else radius * floor
    edges = _log_edges(r_lo, radius, cells)
    mids = np.sqrt(edges[:-1] * edges[1:])
    weights = b * np.diff(edges**n)
    vals = np.abs(np.asarray(scalar(mids), dtype=float))
    if inner == 0:
        mids0 = r_lo * 2.0 ** (-1.0 / n)
        vals = np.concatenate([[abs(float(np.asarray(scalar(np.array([mids0])))[0]))], vals])
        weights = np.concatenate([[b * r_lo**n], weights])
    coarse = None
    if with_coarse and cells >= 2:
        coarse = sample_radial(scalar, n, radius, inner, cells=cells // 2, floor=floor,
                               with_coarse=False)
    return WeightedSampleSet(vals, weights, coarse)


def ball_points(n: int, center, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` scrambled-Sobol points inside ``B_radius(center)`` (deterministic in ``seed``)."""
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return center + radius * _unit_ball_points(n, count, seed)


@lru_cache(maxsize=64)
def _unit_ball_points(n: int, count: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    accept = ball_volume(n) / 2.0**n
    m = int(math.ceil(math.log2(max(count / accept * 1.3, 2))))
    pts = np.empty((0, n))
    while pts.shape[0] < count:
        cube = 2.0 * sampler.random_base2(m) - 1.0
        inside = cube[np.einsum("ij,ij->i", cube, cube) < 1.0]
        pts = np.vstack([pts, inside])
        m = max(m - 1, 1)
    out = pts[:count]
    out.setflags(write=False)
    return out


def sample_grid(scalar: Callable, n: int, center, radius: float, count: int = 2**14,
                seed: int = 0) -> WeightedSampleSet:
    """Equal-weight low-discrepancy samples of ``scalar(points)`` on a (possibly off-centre) ball.

    Weights sum to the ball volume; ``coarse`` is the first half of the
    points with doubled weights.
    """
    pts = ball_points(n, center, radius, count, seed)
    vals = np.abs(np.asarray(scalar(pts), dtype=float))
    vol = ball_volume(n) * radius**n
    half = count // 2
    coarse = None
    if half >= 1:
        coarse = WeightedSampleSet(vals[:half], np.full(half, vol / half))
    return WeightedSampleSet(vals, np.full(count, vol / count), coarse)


def dilation_factor(n: int, p: float, lam: float) -> float:
    """``||f(lam .)||_{L^{p,q}} / ||f||_{L^{p,q}}`` on R^n."""
    return lam ** (-n / p)


__all__ = [
    "WeightedSampleSet", "RearrangementCurve", "LorentzNormResult", "distribution_function",
    "decreasing_rearrangement", "lorentz_norm", "lebesgue_norm", "powerlaw_lorentz_norm",
    "sample_radial", "sample_grid", "ball_points", "dilation_factor",
]
