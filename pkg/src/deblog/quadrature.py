"""Adaptive Gauss-Legendre quadrature and periodic trapezoid rules."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


@lru_cache(maxsize=None)
def _nodes(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(f: Callable, a: float, b: float, order: int = 20) -> float:
    """Fixed-order rule; exact for polynomials of degree < 2*order."""
    x, w = _nodes(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return float(half * np.dot(w, f(mid + half * x)))


def adaptive_gauss_legendre(f: Callable, a: float, b: float, tol: float = 1e-10,
                            order: int = 20, max_depth: int = 40,
                            breakpoints: Sequence[float] = ()) -> float:
    """Integrate a vectorized ``f`` over [a, b] to absolute tolerance ``tol``.

    Each panel is accepted when the rule on the panel agrees with the sum over
    its two halves. ``breakpoints`` inside (a, b) start new panels, which is
    where piecewise integrands lose smoothness.
    """
    if b == a:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        stack = [(lo, hi, gauss_legendre(f, lo, hi, order), 0)]
        panel_tol = tol * (hi - lo) / (b - a)
        while stack:
            l, h, whole, depth = stack.pop()
            m = 0.5 * (l + h)
            left = gauss_legendre(f, l, m, order)
            right = gauss_legendre(f, m, h, order)
            if abs(left + right - whole) <= max(panel_tol * (h - l) / (hi - lo), 1e-15 * abs(whole)) \
                    or depth >= max_depth:
                total += left + right
            else:
                stack.append((l, m, left, depth + 1))
                stack.append((m, h, right, depth + 1))
    return sign * total


def torus_trapezoid(fn: Callable, nangles: int, points: int = 64, x: float = 0.0) -> float:
    """Trapezoid rule on the angle torus; exact for trig polynomials of degree < points."""
    if nangles == 0:
        return float(fn(x, []))
    base = np.arange(points) * (2 * np.pi / points)
    axes = []
    for i in range(nangles):
        shape = [1] * nangles
        shape[i] = points
        axes.append(base.reshape(shape))
    vals = np.broadcast_to(np.asarray(fn(x, axes), dtype=float), (points,) * nangles)
    return float(vals.mean() * (2 * np.pi) ** nangles)
