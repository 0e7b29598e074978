"""Catalogue of closed-form fields and exact evaluation of their jets to order 4.

Two kinds of field are supported:

* radial fields, one :class:`~qgrowth.profiles.ChainProfile` per target
  component, differentiated by the radial chain rule;
* polynomial fields, one sparse polynomial per target component,
  differentiated exactly on the coefficients.

Derivative tensors of order 3 and 4 are stored densely (all index
permutations filled), which is cheap for the ``n <= 8`` used here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from . import polynomials as P
from .bumps import Bump
from .errors import DomainError, FamilyMismatch, OrderError, UnsupportedDimension
from .profiles import (MAX_ORDER, ChainProfile, radial_tensor_coefficients, scaled_bilaplacian,
                       scaled_laplacian, scaled_r_jet)
from .quadrature import ball_volume, integrate_radial

OMEGA_RADIUS = math.exp(-2.0)
DEFAULT_RMIN = 1e-12

LOGLOG4D = "LogLog4D"
SINLOG_SECOND = "SinLogSecondOrder"
SINLOG_FOURTH = "SinLogFourthOrder"
FUNDAMENTAL_LAPLACE = "FundamentalLaplace"
FUNDAMENTAL_BILAP = "FundamentalBilap"
HARMONIC_POLY = "HarmonicPoly"
BIHARMONIC_POLY = "BiharmonicPoly"
POWER_LAW = "PowerLaw"
CUSTOM = "Custom"

SINGULAR_FAMILIES = (LOGLOG4D, SINLOG_SECOND, SINLOG_FOURTH)


@dataclass(frozen=True)
class RadialJet:
    """Profile value and its first four derivatives in ``r`` at one radius."""

    r: float
    d0: float
    d1: float
    d2: float
    d3: float
    d4: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"radial jet needs r > 0, got {self.r}")
        if not all(math.isfinite(v) for v in (self.d0, self.d1, self.d2, self.d3, self.d4)):
            raise DomainError(f"non-finite radial jet at r = {self.r}")

    @classmethod
    def from_profile(cls, profile, r: float) -> "RadialJet":
        sj = scaled_r_jet(profile.jet_s(np.array(math.log(r))))
        return cls(r, *(float(sj[k]) / r**k for k in range(MAX_ORDER + 1)))


@dataclass(frozen=True)
class JetBundle:
    point: np.ndarray
    values: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray | None = None
    third: np.ndarray | None = None
    fourth: np.ndarray | None = None

    @property
    def laplacian(self) -> np.ndarray:
        return np.trace(self.hessian, axis1=1, axis2=2)

    @property
    def bilaplacian(self) -> np.ndarray:
        return np.einsum("kiijj->k", self.fourth)


@dataclass(frozen=True)
class FieldSpec:
    """A vector field R^n -> R^K.

    Exactly one of ``profiles`` (radial components) or ``polys`` (polynomial
    components) is set.  ``r_max`` bounds the radial domain (``None`` for
    all of R^n minus the origin); ``r_min`` is the inner evaluation cutoff.
    """

    n: int
    K: int
    family: str
    params: dict = field(default_factory=dict)
    profiles: tuple | None = None
    polys: tuple | None = None
    r_max: float | None = None
    r_min: float = DEFAULT_RMIN

    def __post_init__(self):
        if self.n < 2:
            raise UnsupportedDimension(f"dimension must be >= 2, got {self.n}")
        if (self.profiles is None) == (self.polys is None):
            raise ValueError("exactly one of profiles / polys must be given")
        comps = self.profiles if self.profiles is not None else self.polys
        if len(comps) != self.K:
            raise ValueError(f"expected {self.K} components, got {len(comps)}")

    @property
    def kind(self) -> str:
        return "radial" if self.profiles is not None else "polynomial"

    @property
    def is_radial(self) -> bool:
        return self.profiles is not None

    # -- radial scalar quantities as functions of s = log r ------------------

    def radial_s_jets(self, s) -> np.ndarray:
        """Per-component log-radius jets, shape ``(K, 5) + s.shape``."""
        self._require_radial()
        return np.stack([p.jet_s(s) for p in self.profiles])

    def scaled_radial(self, what: str, s) -> np.ndarray:
        """Scale-free radial quantities at log-radius ``s``.

        ``value``: |u|;  ``grad``: r |grad u|;  ``hess``: r^2 |D^2 u|;
        ``lap``: r^2 Lap u (per component, shape (K, ...));
        ``bilap``: r^4 Bilap u (per component).
        """
        fj = self.radial_s_jets(s)
        if what == "value":
            return np.sqrt(np.sum(fj[:, 0] ** 2, axis=0))
        a = radial_tensor_coefficients(np.moveaxis(fj, 1, 0))
        if what == "grad":
            return np.sqrt(np.sum(a[0] ** 2, axis=0))
        if what == "hess":
            # eigenvalues A2 + A1 (radial direction) and A1 (n - 1 tangential)
            return np.sqrt(np.sum((a[1] + a[0]) ** 2 + (self.n - 1) * a[0] ** 2, axis=0))
        if what == "lap":
            return np.stack([scaled_laplacian(fj[k], self.n)[0] for k in range(self.K)])
        if what == "bilap":
            return np.stack([scaled_bilaplacian(fj[k], self.n) for k in range(self.K)])
        raise ValueError(f"unknown radial quantity {what!r}")

    def radial_quantity(self, what: str, r) -> np.ndarray:
        """Unscaled version of :meth:`scaled_radial` at radius ``r``."""
        r = np.asarray(r, dtype=float)
        power = {"value": 0, "grad": 1, "hess": 2, "lap": 2, "bilap": 4}[what]
        return self.scaled_radial(what, np.log(r)) / r**power

    def _require_radial(self):
        if self.profiles is None:
            raise FamilyMismatch(f"{self.family} is not a radial field")

    # -- vectorised derivative norms on point clouds --------------------------

    def gradient_norm(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_radial:
            return self.radial_quantity("grad", np.linalg.norm(pts, axis=1))
        idx = [(k, (i,)) for k in range(self.K) for i in range(self.n)]
        vals = P.evaluate_many([self._partial(k, ix) for k, ix in idx], pts)
        return np.sqrt(np.sum(vals**2, axis=1))

    def hessian_norm(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_radial:
            return self.radial_quantity("hess", np.linalg.norm(pts, axis=1))
        idx = [(k, (i, j)) for k in range(self.K) for i in range(self.n) for j in range(i, self.n)]
        mult = np.array([1.0 if ix[0] == ix[1] else 2.0 for _, ix in idx])
        vals = P.evaluate_many([self._partial(k, ix) for k, ix in idx], pts)
        return np.sqrt((vals**2) @ mult)

    def values(self, points) -> np.ndarray:
        """Component values, shape ``(m, K)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_radial:
            s = np.log(np.linalg.norm(pts, axis=1))
            return np.stack([p.jet_s(s)[0] for p in self.profiles], axis=1)
        return P.evaluate_many(self.polys, pts)

    def _partial(self, k: int, index: tuple[int, ...]):
        return _poly_partial(self, k, index)

    # -- serialisation --------------------------------------------------------

    def to_json(self) -> dict:
        params = dict(self.params)
        if not self.is_radial:
            params["polynomials"] = [P.to_json(p) for p in self.polys]
        elif self.family == CUSTOM:
            params["profiles"] = [p.to_json() for p in self.profiles]
            params["r_max"] = self.r_max
        return {"family": self.family, "n": self.n, "K": self.K, "params": params}

    def __hash__(self):
        return id(self)


@lru_cache(maxsize=65536)
def _poly_partial_cached(key, index):
    field_, k = key
    return P.partial(field_.polys[k], index)


def _poly_partial(f: FieldSpec, k: int, index: tuple[int, ...]):
    return _poly_partial_cached((f, k), tuple(sorted(index)))


# ---------------------------------------------------------------------------
# jets


def _check_radial_domain(f: FieldSpec, r: float):
    if r == 0 or r < f.r_min:
        raise DomainError(f"{f.family}: |x| = {r:g} below the inner cutoff {f.r_min:g}")
    if f.r_max is not None and r > f.r_max * (1 + 1e-12):
        raise DomainError(f"{f.family}: |x| = {r:g} outside the domain |x| <= {f.r_max:g}")


def _sym_delta_e(e: np.ndarray) -> np.ndarray:
    n = e.size
    d = np.eye(n)
    return (np.einsum("ij,k->ijk", d, e) + np.einsum("ik,j->ijk", d, e)
            + np.einsum("jk,i->ijk", d, e))


def _sym_delta_ee(e: np.ndarray) -> np.ndarray:
    d = np.eye(e.size)
    ee = np.outer(e, e)
    return (np.einsum("ij,kl->ijkl", d, ee) + np.einsum("ik,jl->ijkl", d, ee)
            + np.einsum("il,jk->ijkl", d, ee) + np.einsum("jk,il->ijkl", d, ee)
            + np.einsum("jl,ik->ijkl", d, ee) + np.einsum("kl,ij->ijkl", d, ee))


def _sym_delta_delta(n: int) -> np.ndarray:
    d = np.eye(n)
    return (np.einsum("ij,kl->ijkl", d, d) + np.einsum("ik,jl->ijkl", d, d)
            + np.einsum("il,jk->ijkl", d, d))


def eval_jet(f: FieldSpec, x: Sequence[float], order: int = 2) -> JetBundle:
    """Exact values and derivatives of ``f`` at ``x`` up to ``order`` (0..4)."""
    if not 0 <= order <= MAX_ORDER:
        raise OrderError(f"order must be in 0..4, got {order}")
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"point must have shape ({f.n},), got {x.shape}")
    n, K = f.n, f.K
    if f.is_radial:
        r = float(np.linalg.norm(x))
        _check_radial_domain(f, r)
        e = x / r
        fj = f.radial_s_jets(np.array(math.log(r)))
        vals = fj[:, 0]
        a = radial_tensor_coefficients(np.moveaxis(fj, 1, 0))  # (4, K)
        grad = np.outer(a[0] / r, e)
        hess = third = fourth = None
        if order >= 2:
            hess = (a[1][:, None, None] * np.outer(e, e)[None] + a[0][:, None, None] * np.eye(n)[None]) / r**2
        if order >= 3:
            eee = np.einsum("i,j,k->ijk", e, e, e)
            third = (a[2][:, None, None, None] * eee[None]
                     + a[1][:, None, None, None] * _sym_delta_e(e)[None]) / r**3
        if order >= 4:
            eeee = np.einsum("i,j,k,l->ijkl", e, e, e, e)
            fourth = (a[3][:, None, None, None, None] * eeee[None]
                      + a[2][:, None, None, None, None] * _sym_delta_ee(e)[None]
                      + a[1][:, None, None, None, None] * _sym_delta_delta(n)[None]) / r**4
        return JetBundle(x, vals, grad, hess, third, fourth)

    tensors = []
    for k_order in range(0, max(order, 1) + 1):
        shape = (K,) + (n,) * k_order
        t = np.empty(shape)
        for k in range(K):
            for idx in itertools.combinations_with_replacement(range(n), k_order):
                v = float(P.evaluate(_poly_partial(f, k, idx), x[None])[0])
                for perm in set(itertools.permutations(idx)):
                    t[(k,) + perm] = v
        tensors.append(t)
    tensors += [None] * (5 - len(tensors))
    return JetBundle(x, tensors[0], tensors[1], tensors[2] if order >= 2 else None,
                     tensors[3] if order >= 3 else None, tensors[4] if order >= 4 else None)


def radial_jet(f: FieldSpec, component: int, r: float) -> RadialJet:
    f._require_radial()
    _check_radial_domain(f, r)
    return RadialJet.from_profile(f.profiles[component], r)


# ---------------------------------------------------------------------------
# catalogue


def loglog4d() -> FieldSpec:
    """``u = (sin log log 1/|x|, cos log log 1/|x|)`` on ``|x| <= e^-2`` in R^4."""
    base = ChainProfile((("affine", -1.0, 0.0), ("log",)))
    return FieldSpec(4, 2, LOGLOG4D, {}, (base.then(("sin",)), base.then(("cos",))),
                     r_max=OMEGA_RADIUS)


def sinlog_second(n: int) -> FieldSpec:
    """``u = (sin((2-n) log|x|), cos((2-n) log|x|))`` on ``|x| <= e^-2``, n >= 3."""
    if n < 3:
        raise UnsupportedDimension("SinLogSecondOrder needs n >= 3")
    base = ChainProfile((("affine", float(2 - n), 0.0),))
    return FieldSpec(n, 2, SINLOG_SECOND, {}, (base.then(("sin",)), base.then(("cos",))),
                     r_max=OMEGA_RADIUS)


def sinlog_fourth(n: int) -> FieldSpec:
    """Same as :func:`sinlog_second` with frequency ``4 - n``, n >= 5."""
    if n < 5:
        raise UnsupportedDimension("SinLogFourthOrder needs n >= 5")
    base = ChainProfile((("affine", float(4 - n), 0.0),))
    return FieldSpec(n, 2, SINLOG_FOURTH, {}, (base.then(("sin",)), base.then(("cos",))),
                     r_max=OMEGA_RADIUS)


def power_law(alpha: float, n: int, coefficient: float = 1.0) -> FieldSpec:
    """Scalar ``coefficient * |x|^alpha``."""
    prof = ChainProfile((("affine", float(alpha), math.log(abs(coefficient))), ("exp",)))
    if coefficient < 0:
        prof = prof.then(("affine", -1.0, 0.0))
    return FieldSpec(n, 1, POWER_LAW, {"alpha": float(alpha), "coefficient": float(coefficient)},
                     (prof,))


def laplace_constant(n: int) -> float:
    """``1 / (n (n - 2) b_n)``: normalises ``-Lap Phi = delta``."""
    return 1.0 / (n * (n - 2) * ball_volume(n))


def bilaplace_constant_formula(n: int) -> float:
    """Closed form of ``c_n`` for ``Bilap(c_n |x|^{4-n}) = delta``, n >= 5."""
    return 1.0 / (2.0 * (n - 2) * (n - 4) * n * ball_volume(n))


REFERENCE_BUMP_RADIUS = 1.0


@dataclass(frozen=True)
class BilaplaceCalibration:
    n: int
    constant: float
    residual: float
    bump_radius: float


@lru_cache(maxsize=None)
def calibrate_bilaplace_constant(n: int, bump_radius: float = REFERENCE_BUMP_RADIUS,
                                 tol: float = 1e-10) -> BilaplaceCalibration:
    """Fix ``c_n`` so that ``int c_n |x|^{4-n} Bilap(phi) dx = phi(0)`` for a reference bump.

    The integrand ``|x|^{4-n} Bilap(phi)`` times the surface factor
    ``r^{n-1}`` is the smooth ``r^3 Bilap(phi)(r)``, so the integral is one
    radial quadrature.
    """
    if n < 5:
        raise UnsupportedDimension("bilaplacian kernel implemented for n >= 5 only")
    bump = Bump(n, bump_radius)

    def h(r):
        return r ** (4 - n) * bump.radial("bilap", r)
    res = integrate_radial(h, 0.0, bump_radius, n, tol)
    constant = bump.at_zero() / res.value
    residual = abs(constant * res.value - bump.at_zero()) + abs(constant) * res.error_estimate
    return BilaplaceCalibration(n, constant, residual / bump.at_zero(), bump_radius)


def fundamental_solution(n: int, operator_order: int) -> FieldSpec:
    """Radial kernel ``Phi`` (order 2, n >= 3) or ``Psi`` (order 4, n >= 5).

    ``Phi = |x|^{2-n} / (n (n-2) b_n)`` satisfies ``-Lap Phi = delta``.
    ``Psi = c_n |x|^{4-n}`` with ``c_n`` from :func:`calibrate_bilaplace_constant`.
    """
    if operator_order == 2:
        if n < 3:
            raise UnsupportedDimension("logarithmic n = 2 Laplace kernel is not supported")
        c = laplace_constant(n)
        prof = ChainProfile((("affine", float(2 - n), math.log(c)), ("exp",)))
        return FieldSpec(n, 1, FUNDAMENTAL_LAPLACE, {"order": 2, "constant": c}, (prof,))
    if operator_order == 4:
        if n < 5:
            raise UnsupportedDimension("logarithmic n = 4 bilaplace kernel is not supported")
        cal = calibrate_bilaplace_constant(n)
        prof = ChainProfile((("affine", float(4 - n), math.log(cal.constant)), ("exp",)))
        return FieldSpec(n, 1, FUNDAMENTAL_BILAP,
                         {"order": 4, "constant": cal.constant, "calibration_residual": cal.residual},
                         (prof,))
    raise ValueError(f"operator order must be 2 or 4, got {operator_order}")


def polynomial_field(n: int, polys: Sequence, family: str = CUSTOM, params: dict | None = None) -> FieldSpec:
    return FieldSpec(n, len(polys), family, dict(params or {}), polys=tuple(dict(p) for p in polys))


def linear_field(n: int, i: int = 0) -> FieldSpec:
    """The coordinate function ``x_i`` (harmonic, constant unit gradient)."""
    return polynomial_field(n, [P.variable(n, i)], HARMONIC_POLY, {"name": f"x{i + 1}"})


def perturbed(f: FieldSpec, component: int, factor: float) -> FieldSpec:
    """Copy of ``f`` with one component multiplied by ``factor`` (family ``Custom``)."""
    if f.is_radial:
        profs = list(f.profiles)
        profs[component] = profs[component].then(("affine", float(factor), 0.0))
        return FieldSpec(f.n, f.K, CUSTOM, {"base": f.family}, tuple(profs), r_max=f.r_max, r_min=f.r_min)
    polys = list(f.polys)
    polys[component] = P.scale(polys[component], factor)
    return FieldSpec(f.n, f.K, CUSTOM, {"base": f.family}, polys=tuple(polys))


def zero_field(n: int, K: int = 1) -> FieldSpec:
    return polynomial_field(n, [{} for _ in range(K)], CUSTOM, {"name": "zero"})


def catalog_field(family: str, n: int, params: dict | None = None) -> FieldSpec:
    params = dict(params or {})
    if family == LOGLOG4D:
        if n != 4:
            raise UnsupportedDimension("LogLog4D is defined for n = 4 only")
        return loglog4d()
    if family == SINLOG_SECOND:
        return sinlog_second(n)
    if family == SINLOG_FOURTH:
        return sinlog_fourth(n)
    if family == POWER_LAW:
        return power_law(params["alpha"], n, params.get("coefficient", 1.0))
    if family == FUNDAMENTAL_LAPLACE:
        return fundamental_solution(n, 2)
    if family == FUNDAMENTAL_BILAP:
        return fundamental_solution(n, 4)
    raise FamilyMismatch(f"no catalogue constructor for family {family!r}")


def field_from_json(data: dict) -> FieldSpec:
    """Inverse of :meth:`FieldSpec.to_json`."""
    family, n, params = data["family"], int(data["n"]), dict(data.get("params", {}))
    if family in (CUSTOM, HARMONIC_POLY, BIHARMONIC_POLY) and (
            "profiles" in params or "polynomials" in params):
        if "profiles" in params:
            profs = tuple(ChainProfile.from_json(p) for p in params.pop("profiles"))
            r_max = params.pop("r_max", None)
            return FieldSpec(n, len(profs), family, params, profs, r_max=r_max)
        polys = tuple(P.from_json(p) for p in params.pop("polynomials"))
        params.pop("r_max", None)
        return FieldSpec(n, len(polys), family, params, polys=polys)
    f = catalog_field(family, n, params)
    if int(data.get("K", f.K)) != f.K:
        raise ValueError(f"{family} has K = {f.K}, not {data['K']}")
    return f


# ---------------------------------------------------------------------------
# comparison corpora


def _complex_power(n: int, i: int, j: int, d: int) -> tuple[dict, dict]:
    """Real and imaginary parts of ``(x_i + i x_j)^d`` as integer polynomials."""
    re, im = {}, {}
    for k in range(d + 1):
        c = math.comb(d, k)
        # term c x_i^{d-k} (i x_j)^k
        e = [0] * n
        e[i] += d - k
        e[j] += k
        phase = k % 4
        if phase == 0:
            re[tuple(e)] = re.get(tuple(e), 0) + c
        elif phase == 1:
            im[tuple(e)] = im.get(tuple(e), 0) + c
        elif phase == 2:
            re[tuple(e)] = re.get(tuple(e), 0) - c
        else:
            im[tuple(e)] = im.get(tuple(e), 0) - c
    return P.clean(re), P.clean(im)


def harmonic_polynomials(n: int, max_degree: int) -> list[dict]:
    """Integer harmonic polynomials of degree <= max_degree (<= 4).

    Built from ``Re/Im (x_i + i x_j)^d``, products of distinct coordinates,
    and products of harmonic factors in disjoint sets of variables.
    """
    out: list[dict] = [P.monomial(n)]
    if max_degree >= 1:
        out += [P.variable(n, i) for i in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    for d in range(2, max_degree + 1):
        for i, j in pairs:
            out += list(_complex_power(n, i, j, d))
        for idx in itertools.combinations(range(n), d):
            out.append(P.monomial(n, {i: 1 for i in idx}))
        if d >= 3:
            for i, j in pairs:
                re2, _ = _complex_power(n, i, j, 2)
                rest = [k for k in range(n) if k not in (i, j)]
                for idx in itertools.combinations(rest, d - 2):
                    out.append(P.mul(re2, P.monomial(n, {k: 1 for k in idx})))
        if d == 4:
            for (i, j), (k, l) in itertools.combinations(pairs, 2):
                if len({i, j, k, l}) == 4:
                    out.append(P.mul(_complex_power(n, i, j, 2)[0], _complex_power(n, k, l, 2)[0]))
    seen, unique = set(), []
    for p in out:
        key = tuple(sorted(p.items()))
        if key not in seen:
            seen.add(key)
            unique.append(p)
    return unique


def comparison_corpus(kind: str, n: int, max_degree: int) -> list[FieldSpec]:
    """Harmonic or biharmonic polynomial fields, each checked exactly at construction."""
    if max_degree > 4:
        raise ValueError("max_degree must be <= 4")
    if kind == "harmonic":
        polys = harmonic_polynomials(n, max_degree)
        family = HARMONIC_POLY
    elif kind == "biharmonic":
        polys = harmonic_polynomials(n, max_degree)
        r2 = {tuple(2 if k == i else 0 for k in range(n)): 1 for i in range(n)}
        polys += [P.mul(r2, h) for h in harmonic_polynomials(n, max_degree - 2)] if max_degree >= 2 else []
        family = BIHARMONIC_POLY
    else:
        raise ValueError(f"kind must be harmonic or biharmonic, got {kind!r}")
    fields = []
    for p in polys:
        op = P.laplacian(p, n)
        if kind == "biharmonic":
            op = P.laplacian(op, n)
        if op:
            raise AssertionError(f"corpus entry {p} fails the {kind} check")
        fields.append(polynomial_field(n, [p], family, {"degree": P.degree(p)}))
    return fields
