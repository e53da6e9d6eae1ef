"""Exact rational polynomial helpers (power basis, lowest degree first)."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

Poly = list[Fraction]


def frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def trim(p: Poly) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p or [Fraction(0)]


def add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def scale(a: Poly, s) -> Poly:
    return trim([c * s for c in a])


def mul(a: Poly, b: Poly) -> Poly:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return trim(out)


def power(a: Poly, n: int) -> Poly:
    out: Poly = [Fraction(1)]
    for _ in range(n):
        out = mul(out, a)
    return out


def deriv(a: Poly, r: int = 1) -> Poly:
    for _ in range(r):
        a = [a[i] * i for i in range(1, len(a))] or [Fraction(0)]
    return trim(a)


def antideriv(a: Poly) -> Poly:
    return trim([Fraction(0)] + [c / (i + 1) for i, c in enumerate(a)])


def evaluate(a: Poly, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def shift(a: Poly, h) -> Poly:
    """Coefficients of p(s + h) in s."""
    h = frac(h)
    out = [Fraction(0)] * len(a)
    for i, c in enumerate(a):
        if c == 0:
            continue
        for j in range(i + 1):
            out[j] += c * math.comb(i, j) * h ** (i - j)
    return trim(out)


def integrate(a: Poly, lo, hi) -> Fraction:
    F = antideriv(a)
    return evaluate(F, frac(hi)) - evaluate(F, frac(lo))


def solve(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Exact Gaussian elimination."""
    n = len(b)
    M = [list(map(frac, row)) + [frac(v)] for row, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def hermite(h, left: Sequence, right: Sequence) -> Poly:
    """Polynomial in s on [0, h] with p^(r)(0) = left[r], p^(r)(h) = right[r]."""
    h = frac(h)
    nl, nr = len(left), len(right)
    deg = nl + nr - 1
    rows, rhs = [], []
    for r, v in enumerate(left):
        rows.append([Fraction(math.factorial(r)) if j == r else Fraction(0) for j in range(deg + 1)])
        rhs.append(frac(v))
    for r, v in enumerate(right):
        rows.append([Fraction(math.perm(j, r)) * h ** (j - r) if j >= r else Fraction(0)
                     for j in range(deg + 1)])
        rhs.append(frac(v))
    return trim(solve(rows, rhs))
