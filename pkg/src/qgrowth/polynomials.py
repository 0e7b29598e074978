"""Sparse multivariate polynomials with exact coefficient arithmetic.

A polynomial in ``n`` variables is a mapping ``{exponent tuple: coefficient}``.
Integer coefficients stay integers under differentiation and products, so the
harmonic and biharmonic checks on the comparison corpus are exact.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Mapping

import numpy as np

Poly = dict[tuple[int, ...], float]


def clean(p: Mapping) -> Poly:
    return {e: c for e, c in p.items() if c != 0}


def add(*ps: Mapping) -> Poly:
    out: dict = defaultdict(int)
    for p in ps:
        for e, c in p.items():
            out[e] += c
    return clean(out)


def scale(p: Mapping, a) -> Poly:
    return clean({e: a * c for e, c in p.items()})


def mul(p: Mapping, q: Mapping) -> Poly:
    out: dict = defaultdict(int)
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            out[tuple(a + b for a, b in zip(e1, e2))] += c1 * c2
    return clean(out)


def monomial(n: int, exps: dict[int, int] | None = None, coef=1) -> Poly:
    e = [0] * n
    for i, k in (exps or {}).items():
        e[i] = k
    return {tuple(e): coef}


def variable(n: int, i: int) -> Poly:
    return monomial(n, {i: 1})


def derivative(p: Mapping, i: int) -> Poly:
    out = {}
    for e, c in p.items():
        if e[i] == 0:
            continue
        e2 = list(e)
        e2[i] -= 1
        out[tuple(e2)] = c * e[i]
    return clean(out)


def partial(p: Mapping, index: tuple[int, ...]) -> Poly:
    for i in index:
        p = derivative(p, i)
    return dict(p)


def laplacian(p: Mapping, n: int) -> Poly:
    return add(*(partial(p, (i, i)) for i in range(n)))


def degree(p: Mapping) -> int:
    return max((sum(e) for e in p), default=0)


def monomial_matrix(exps: np.ndarray, points) -> np.ndarray:
    """``(m, T)`` matrix of the monomials ``x^e`` for the rows ``e`` of ``exps``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exps = np.asarray(exps, dtype=int).reshape(-1, pts.shape[1])
    out = np.ones((pts.shape[0], exps.shape[0]))
    top = int(exps.max()) if exps.size else 0
    for i in range(pts.shape[1]):
        powers = pts[:, i, None] ** np.arange(top + 1)
        out *= powers[:, exps[:, i]]
    return out


def evaluate_many(polys, points) -> np.ndarray:
    """Evaluate several polynomials at once; returns shape ``(m, len(polys))``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    basis = sorted({e for p in polys for e in p})
    if not basis:
        return np.zeros((pts.shape[0], len(polys)))
    index = {e: k for k, e in enumerate(basis)}
    coefs = np.zeros((len(basis), len(polys)))
    for j, p in enumerate(polys):
        for e, c in p.items():
            coefs[index[e], j] = float(c)
    return monomial_matrix(np.array(basis), pts) @ coefs


def evaluate(p: Mapping, points) -> np.ndarray:
    """Evaluate at an ``(m, n)`` array of points (or a single point)."""
    return evaluate_many([p], points)[:, 0]


def ball_integral(p: Mapping, n: int, radius: float = 1.0) -> float:
    """Exact integral of ``p`` over the origin-centred ball of the given radius."""
    total = 0.0
    for e, c in p.items():
        if any(k % 2 for k in e):
            continue
        d = sum(e)
        # integral of x^e over the unit sphere, then the radial factor
        log_sphere = math.log(2.0) + sum(math.lgamma((k + 1) / 2) for k in e) - math.lgamma((d + n) / 2)
        total += float(c) * math.exp(log_sphere) * radius ** (d + n) / (d + n)
    return total


def to_json(p: Mapping) -> list:
    return [[list(e), c] for e, c in sorted(p.items())]


def from_json(data) -> Poly:
    return {tuple(e): c for e, c in data}
