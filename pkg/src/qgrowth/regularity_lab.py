"""Regularity diagnostics: Morrey subnorms, Lorentz ball decay, oscillation and
Sobolev membership.

Every diagnostic returns a plain report object with ``to_json`` (and CSV
where a table makes sense) so the command line front end can write it
without further processing.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import DomainError, FamilyMismatch, ToleranceNotMet
from .field_kernel import LOGLOG4D, FieldSpec
from .quadrature import (QuadratureResult, Verdict, ball_volume, integrate_offcenter_ball,
                         integrate_radial)
from .rearrange import (ball_points, decreasing_rearrangement, lorentz_norm, sample_grid,
                        sample_radial)

MEMBER = "Member"
NOT_MEMBER = "NotMember"
INCONCLUSIVE = "Inconclusive"
CLEAN_FIT_RESIDUAL = 0.1


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual: float

    @property
    def clean(self) -> bool:
        return self.residual <= CLEAN_FIT_RESIDUAL

    @property
    def label(self) -> str:
        return "CleanExponent" if self.clean else "NoCleanExponent"

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual}


def loglog_fit(radii: Sequence[float], values: Sequence[float]) -> LogLogFit | None:
    """Least-squares line through ``(log r, log value)``.

    ``residual`` is the root-mean-square deviation in natural-log units.
    Returns ``None`` when fewer than two positive finite values are present.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 2:
        return None
    x, y = np.log(r[ok]), np.log(v[ok])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return LogLogFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


@dataclass
class ScanReport:
    quantity: str
    center: list[float]
    radii: list[float]
    values: list[float]
    fit: LogLogFit | None = None
    extra: dict = dc_field(default_factory=dict)

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "center": list(self.center), "radii": list(self.radii),
                "values": [None if not math.isfinite(v) else v for v in self.values],
                "fit": None if self.fit is None else self.fit.to_json(), **self.extra}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", self.quantity])
        for r, v in zip(self.radii, self.values):
            w.writerow([repr(float(r)), repr(float(v))])
        return buf.getvalue()


@dataclass(frozen=True)
class DecayScanConfig:
    """Geometric radius grid ``r0 theta^l`` (``l < count``) around ``center``.

    ``norm`` is ``("morrey", p)``, ``("lorentz", p, q)`` or ``("oscillation",)``;
    ``fit`` is ``"none"`` or ``"loglog"``.
    """

    center: tuple[float, ...] | None
    r0: float
    theta: float
    count: int
    norm: tuple = ("lorentz", None, math.inf)
    fit: str = "loglog"
    samples: int = 2**14
    seed: int = 0
    hessian: bool = False

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.count < 1 or self.r0 <= 0:
            raise ValueError("need r0 > 0 and count >= 1")
        if self.fit not in ("none", "loglog"):
            raise ValueError(f"unknown fit {self.fit!r}")

    @property
    def radii(self) -> list[float]:
        return [self.r0 * self.theta**k for k in range(self.count)]


@dataclass
class MembershipVerdict:
    k: int
    p: float
    verdict: str
    integrals: dict[str, float] = dc_field(default_factory=dict)
    increments: list[float] = dc_field(default_factory=list)
    detail: str = ""

    def to_json(self) -> dict:
        return {"space": {"k": self.k, "p": self.p}, "verdict": self.verdict,
                "integrals": self.integrals, "increments": self.increments, "detail": self.detail}


# ---------------------------------------------------------------------------
# helpers


def _center(f: FieldSpec, center) -> np.ndarray:
    return np.zeros(f.n) if center is None else np.asarray(center, dtype=float)


def _check_ball(f: FieldSpec, center: np.ndarray, r: float):
    if f.r_max is not None and np.linalg.norm(center) + r > f.r_max * (1 + 1e-12):
        raise DomainError(f"ball of radius {r:g} at |x0| = {np.linalg.norm(center):g} "
                          f"leaves the domain |x| <= {f.r_max:g}")


def _grad_density(f: FieldSpec, p: float, order: int = 1):
    """``s -> (r^order |D^order u|)^p r^{n - order p}``, the log-radius density of ``|D^order u|^p``."""
    what = "grad" if order == 1 else "hess"

    def w(s):
        with np.errstate(over="ignore", under="ignore"):
            return f.scaled_radial(what, s) ** p * np.exp((f.n - order * p) * s)
    return w


def _qmc_integral(values_fn, f: FieldSpec, center: np.ndarray, r: float, count: int,
                  seed: int) -> float:
    samples = sample_grid(values_fn, f.n, center, r, count, seed)
    return math.fsum(samples.values * samples.weights)


# ---------------------------------------------------------------------------
# Morrey subnorms


def morrey_subnorm(f: FieldSpec, x0, r: float, p: float, tol: float = 1e-8, *,
                   samples: int = 2**14, seed: int = 0) -> float:
    """``r^{p-n} int_{B_r(x0)} |grad u|^p``; ``inf`` when the integral diverges.

    Radial fields use :func:`integrate_radial` (centred balls) or the cap
    reduction of :func:`integrate_offcenter_ball`.  Polynomial fields with a
    constant gradient are exact; other polynomial fields use scrambled-Sobol
    averages with ``samples`` points.
    """
    c = _center(f, x0)
    _check_ball(f, c, r)
    if f.is_radial:
        w = _grad_density(f, p)
        if np.linalg.norm(c) == 0:
            res = integrate_radial(None, 0.0, r, f.n, tol, density=w)
        else:
            res = integrate_offcenter_ball(None, c, r, f.n, tol, density=w)
        if res.verdict is Verdict.DIVERGENT:
            return math.inf
        total = res.value
    else:
        if all(max(sum(e) for e in poly) <= 1 for poly in f.polys if poly):
            g = f.gradient_norm(np.zeros((1, f.n)))[0]
            total = g**p * ball_volume(f.n) * r**f.n
        else:
            total = _qmc_integral(lambda x: f.gradient_norm(x) ** p, f, c, r, samples, seed)
    return r ** (p - f.n) * total


def morrey_increments(f: FieldSpec, p: float, edges: Sequence[float], tol: float = 1e-10) -> list[float]:
    """``r_k^{p-n} int_{r_{k+1} < |x| < r_k} |grad u|^p`` for decreasing ``edges``.

    At ``p = n`` the scale factor is 1 and these are the per-shell
    contributions to ``M_n(0, r)``; equal values per decade mean the
    subnorm does not decay.
    """
    f._require_radial()
    w = _grad_density(f, p)
    out = []
    for hi, lo in zip(edges[:-1], edges[1:]):
        res = integrate_radial(None, lo, hi, f.n, tol, density=w)
        out.append(hi ** (p - f.n) * res.value)
    return out


def morrey_scan(f: FieldSpec, config: DecayScanConfig, tol: float = 1e-8) -> ScanReport:
    p = config.norm[1]
    radii = config.radii
    vals = [morrey_subnorm(f, config.center, r, p, tol, samples=config.samples, seed=config.seed)
            for r in radii]
    fit = loglog_fit(radii, vals) if config.fit == "loglog" else None
    extra = {"family": f.family, "n": f.n, "p": p}
    if fit is not None:
        extra["fit_label"] = fit.label
    return ScanReport(f"morrey_p{p:g}", list(_center(f, config.center)), radii, vals, fit, extra)


# ---------------------------------------------------------------------------
# Lorentz decay on shrinking balls


def lorentz_on_ball(f: FieldSpec, center, r: float, p: float, q: float, *, order: int = 1,
                    samples: int = 2**14, seed: int = 0):
    """Empirical ``||D^order u||_{L^{p,q}(B_r(center))}``.

    Radial fields on centred balls use log-radius cells (exact ``f*`` for a
    monotone profile); everything else uses scrambled-Sobol samples.
    """
    c = _center(f, center)
    _check_ball(f, c, r)
    what = "grad" if order == 1 else "hess"
    if f.is_radial and np.linalg.norm(c) == 0:
        data = sample_radial(lambda rr: f.radial_quantity(what, rr), f.n, r, cells=samples)
    else:
        fn = f.gradient_norm if order == 1 else f.hessian_norm
        data = sample_grid(fn, f.n, c, r, samples, seed)
    return lorentz_norm(decreasing_rearrangement(data), p, q)


def lorentz_ball_decay(f: FieldSpec, config: DecayScanConfig) -> ScanReport:
    """``||grad u||_{L^{p,q}}`` (default ``(n, inf)``) on the balls of the scan.

    With ``config.hessian`` the paired quantity
    ``||grad u||_{L^{n,inf}} + ||D^2 u||_{L^{n/2,inf}}`` is scanned instead.
    The report records whether each step at least halves the norm, the
    exponent ``alpha_0 = log 2 / log(1/theta)`` that halving would certify,
    and the fitted log-log slope.
    """
    p = config.norm[1] if config.norm[1] is not None else float(f.n)
    q = config.norm[2]
    radii = config.radii
    vals, errs = [], []
    for r in radii:
        res = lorentz_on_ball(f, config.center, r, p, q, samples=config.samples, seed=config.seed)
        v, e = res.value, res.error_bound
        if config.hessian:
            h = lorentz_on_ball(f, config.center, r, f.n / 2, math.inf, order=2,
                                samples=config.samples, seed=config.seed)
            v, e = v + h.value, e + h.error_bound
        vals.append(v)
        errs.append(e)
    fit = loglog_fit(radii, vals) if config.fit == "loglog" else None
    halving = [b <= 0.5 * a for a, b in zip(vals[:-1], vals[1:])]
    extra = {"family": f.family, "n": f.n, "p": p, "q": "inf" if math.isinf(q) else q,
             "theta": config.theta, "error_bounds": errs, "halving": halving,
             "alpha0": math.log(2.0) / math.log(1.0 / config.theta) if halving and all(halving) else None}
    if fit is not None:
        extra["fit_label"] = fit.label
    name = "lorentz_grad_plus_hess" if config.hessian else f"lorentz_grad_p{p:g}"
    return ScanReport(name, list(_center(f, config.center)), radii, vals, fit, extra)


# ---------------------------------------------------------------------------
# oscillation


def oscillation(f: FieldSpec, center, r: float, *, samples: int = 2**12, seed: int = 0) -> float:
    """``max_k (sup - inf)`` of ``u_k`` on ``B_r(center)``.

    Exact for radial chain profiles on centred balls (interval images of the
    argument); otherwise estimated from scrambled-Sobol samples.
    """
    c = _center(f, center)
    if f.is_radial and np.linalg.norm(c) == 0 and all(hasattr(p, "range_on") for p in f.profiles):
        return max(hi - lo for lo, hi in (p.range_on(0.0, r) for p in f.profiles))
    pts = np.vstack([c[None], c + (r * (1 - 1e-12)) * _sphere_rim(f.n),
                     ball_points(f.n, c, r, samples, seed)])
    if f.is_radial:
        pts = pts[np.linalg.norm(pts, axis=1) > 0]
    vals = f.values(pts)
    return float(np.max(vals.max(axis=0) - vals.min(axis=0)))


def _sphere_rim(n: int) -> np.ndarray:
    e = np.eye(n)
    return np.vstack([e, -e])


def oscillation_scan(f: FieldSpec, center, radii: Sequence[float], *, fit: bool = True) -> ScanReport:
    vals = [oscillation(f, center, r) for r in radii]
    lf = loglog_fit(radii, vals) if fit else None
    extra = {"family": f.family, "n": f.n}
    if lf is not None:
        extra["fit_label"] = lf.label
    return ScanReport("oscillation", list(_center(f, center)), list(map(float, radii)), vals, lf, extra)


# ---------------------------------------------------------------------------
# Sobolev membership


def _loglog_bound_terms(p: float) -> dict:
    """Densities of ``1/(|x|^2 f^2)``, ``1/(|x|^4 f^4)``, ``1/(|x|^4 f^2)`` with ``f = log 1/|x|``, n = 4."""
    def make(rp, fp):
        def w(s):
            return np.exp((4 - rp) * s) / (-s) ** fp
        return w
    return {"1/(|x|^2 f^2)": make(2, 2), "1/(|x|^4 f^4)": make(4, 4), "1/(|x|^4 f^2)": make(4, 2)}


def sobolev_membership(f: FieldSpec, k: int, p: float, tol: float = 1e-8, *,
                       radius: float | None = None) -> MembershipVerdict:
    """Decide ``u in W^{k,p}`` on the field's domain ball.

    Integrates ``|u|^p``, ``|grad u|^p`` and (for ``k = 2``) ``|D^2 u|^p``
    as log-radius densities.  A divergent integral gives ``NotMember``
    with its dyadic increment table; a quadrature that cannot decide gives
    ``Inconclusive``.  For the fourth-order log-log field at ``p = 2`` the
    three majorant integrals of the Hessian bound are reported as well.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if p < 1:
        raise ValueError("p must be >= 1")
    f._require_radial()
    R = radius if radius is not None else f.r_max
    if R is None:
        raise DomainError("field has no bounded domain; pass radius")
    dens = {"|u|^p": lambda s: f.scaled_radial("value", s) ** p * np.exp(f.n * s),
            "|grad u|^p": _grad_density(f, p, 1)}
    if k == 2:
        dens["|D^2 u|^p"] = _grad_density(f, p, 2)
    if f.family == LOGLOG4D and k == 2 and p == 2:
        dens.update(_loglog_bound_terms(p))
    integrals: dict[str, float] = {}
    for name, w in dens.items():
        try:
            res: QuadratureResult = integrate_radial(None, 0.0, R, f.n, tol, density=w)
        except ToleranceNotMet as exc:
            return MembershipVerdict(k, p, INCONCLUSIVE, integrals, [], f"{name}: {exc}")
        if res.verdict is Verdict.DIVERGENT:
            return MembershipVerdict(k, p, NOT_MEMBER, integrals, list(res.increments),
                                     f"{name}: {res.growth}")
        integrals[name] = res.value
    return MembershipVerdict(k, p, MEMBER, integrals)


# ---------------------------------------------------------------------------
# harmonic decay constant


def harmonic_decay_constant(corpus: Sequence[FieldSpec], thetas: Sequence[float],
                            centers: Sequence[Sequence[float]], *, samples: int = 2**12,
                            seed: int = 0, paired: bool = False) -> ScanReport:
    """Largest ``||grad phi||_{L^{n,inf}(B_theta(x))} / (theta ||grad phi||_{L^{n,inf}(B_1)})``.

    ``paired`` switches to the biharmonic variant, where both numerator and
    denominator are ``||grad phi||_{L^{n,inf}} + ||D^2 phi||_{L^{n/2,inf}}``.
    Entries whose denominator vanishes (constants, and for the unpaired
    variant nothing else) are skipped.  ``values`` holds the maximum ratio
    per ``theta``; the overall maximum and the arg-max entry go to ``extra``.
    """
    for t in thetas:
        if not 0 < t < 0.25:
            raise ValueError("theta must lie in (0, 1/4)")
    for c in centers:
        if np.linalg.norm(c) >= 0.25:
            raise ValueError("centres must lie in B_{1/4}")

    def norm_on(fld, c, r):
        v = lorentz_on_ball(fld, c, r, fld.n, math.inf, samples=samples, seed=seed).value
        if paired:
            v += lorentz_on_ball(fld, c, r, fld.n / 2, math.inf, order=2, samples=samples,
                                 seed=seed).value
        return v

    per_theta = {float(t): 0.0 for t in thetas}
    best, arg, used = 0.0, None, 0
    for idx, fld in enumerate(corpus):
        den = norm_on(fld, None, 1.0)
        if den <= 1e-12:
            continue
        used += 1
        for t in thetas:
            for c in centers:
                ratio = norm_on(fld, c, t) / (t * den)
                per_theta[float(t)] = max(per_theta[float(t)], ratio)
                if ratio > best:
                    best, arg = ratio, {"index": idx, "theta": float(t), "center": list(map(float, c))}
    if used == 0:
        raise FamilyMismatch("every corpus entry has a vanishing denominator")
    n = corpus[0].n
    return ScanReport("harmonic_decay_ratio" if not paired else "biharmonic_decay_ratio",
                      [0.0] * n, list(per_theta), list(per_theta.values()), None,
                      {"max_ratio": best, "argmax": arg, "entries_used": used, "samples": samples})
