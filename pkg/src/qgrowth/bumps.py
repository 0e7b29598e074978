"""Compactly supported polynomial bumps used as weak-form test functions.

The bump is ``(1 - |x - c|^2 / rho^2)^5`` inside ``B_rho(c)`` and zero
outside: C^4 across the support boundary, with radial derivatives that are
exact polynomials in ``r = |x - c|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial


def _radial_laplacian_poly(p: Polynomial, n: int) -> Polynomial:
    # p is even in r, so p'/r is again a polynomial
    dp = p.deriv()
    return p.deriv(2) + (n - 1) * Polynomial(dp.coef[1:] if len(dp.coef) > 1 else [0.0])


@dataclass(frozen=True)
class Bump:
    n: int
    radius: float
    center: tuple[float, ...] | None = None
    power: int = 5
    _polys: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        base = Polynomial([1.0, 0.0, -1.0 / self.radius**2]) ** self.power
        lap = _radial_laplacian_poly(base, self.n)
        bilap = _radial_laplacian_poly(lap, self.n)
        polys = {
            "value": base,
            "d1": base.deriv(),
            "d2": base.deriv(2),
            "d1_over_r": Polynomial(base.deriv().coef[1:]),
            "lap": lap,
            "dlap": lap.deriv(),
            "bilap": bilap,
        }
        object.__setattr__(self, "_polys", polys)

    @property
    def center_norm(self) -> float:
        return 0.0 if self.center is None else float(np.linalg.norm(self.center))

    def radial(self, what: str, r) -> np.ndarray:
        """Radial profile quantity at distance ``r`` from the centre, zero off support.

        ``what`` is one of ``value``, ``d1`` (d/dr), ``d1_over_r``, ``d2``, ``lap``,
        ``dlap``, ``bilap``.
        """
        r = np.asarray(r, dtype=float)
        out = self._polys[what](r)
        return np.where(r < self.radius, out, 0.0)

    def at_zero(self) -> float:
        return float(self.radial("value", self.center_norm))

    def to_json(self) -> dict:
        return {"n": self.n, "radius": self.radius,
                "center": list(self.center) if self.center is not None else None,
                "power": self.power}
