"""Desingularizing profiles f and their scalings f_eps.

Two families exist, named after the parity of the singularity order m:

* ``"even"`` (m = 2k): f is an odd function with f' > 0 on [-1, 1] and
  f(t) = -1/((2k-1) t^(2k-1)) +- 2 for |t| > 1.
* ``"odd"`` (m = 2k+1): f is an even function with f(t) = -t^2 + 2 on
  [-1, 1], a polynomial bridge on 1 < |t| <= 2 and a closed-form tail beyond.

Every piece is a polynomial built in exact rational arithmetic, or a closed
form, so derivatives of any order are exact up to one final rounding;
nothing here uses finite differences.

Even case interior. f' on [0, 1] is built as q(t) = P(t^2) with P a degree-D
Bernstein polynomial in u = t^2. The last J Bernstein coefficients are fixed
by the jet of u^(-k) at u = 1 (so f' matches t^(-2k) to J-1 derivatives at
t = 1); all remaining coefficients share one value c, fixed by the
normalization f(1) = 2 - 1/(2k-1). D is the smallest degree >= J for which
every coefficient is positive, which makes f' > 0 on [-1, 1] automatic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import _exactpoly as xp
from .errors import ProfileError
from .report import CheckReport, Measurement

EVEN = "even"
ODD = "odd"
CORRECTED = "corrected"
LITERAL_TAIL = "paper-literal"

MAX_BERNSTEIN_DEGREE = 200
POSITIVITY_SAMPLES = 2**12


def falling(a: float, r: int) -> float:
    """Falling factorial a (a-1) ... (a-r+1)."""
    out = 1.0
    for i in range(r):
        out *= a - i
    return out


@dataclass(frozen=True)
class Tail:
    """``scale * t**(-power) + offset`` (t > 0), or ``log t + offset`` if power is None."""

    scale: float
    power: int | None
    offset: float = 0.0

    def derivative(self, t, order: int):
        t = np.asarray(t, dtype=float)
        if self.power is None:
            if order == 0:
                return np.log(t) + self.offset
            return (-1.0) ** (order - 1) * math.factorial(order - 1) * t ** (-float(order))
        val = self.scale * falling(-self.power, order) * t ** (-float(self.power + order))
        return val + self.offset if order == 0 else val



class PolyPiece:
    """Polynomial f on [left, right], built exactly, evaluated in floats.

    Float coefficients are kept about both endpoints and each point is
    evaluated in the expansion about the nearer one, so derivatives at a
    junction come from a single rounded coefficient.
    """

    def __init__(self, left: float, right: float, exact: list[Fraction], max_order: int):
        self.left = float(left)
        self.right = float(right)
        self.exact = exact  # in s = t - left
        h = Fraction(right) - Fraction(left)
        about_right = xp.shift(exact, h)
        self._cl = [np.array([float(c) for c in xp.deriv(exact, r)]) for r in range(max_order + 1)]
        self._cr = [np.array([float(c) for c in xp.deriv(about_right, r)]) for r in range(max_order + 1)]

    @property
    def degree(self) -> int:
        return len(self.exact) - 1

    def derivative(self, t, order: int):
        t = np.asarray(t, dtype=float)
        mid = 0.5 * (self.left + self.right)
        near_left = npoly.polyval(t - self.left, self._cl[order])
        near_right = npoly.polyval(t - self.right, self._cr[order])
        return np.where(t <= mid, near_left, near_right)

    def exact_in_t(self) -> list[Fraction]:
        """Exact coefficients in the global variable t."""
        return xp.shift(self.exact, -Fraction(self.left))


@dataclass(frozen=True)
class Profile:
    """Piecewise description of f on t >= 0, extended by symmetry.

    ``pieces`` holds :class:`PolyPiece` objects for f on consecutive closed
    intervals starting at 0; the tail applies for t > ``pieces[-1].right``.
    """

    parity: str
    k: int
    J: int
    tail_mode: str
    pieces: tuple
    tail: Tail
    max_derivative_order: int
    info: dict = field(default_factory=dict, compare=False)

    @property
    def support(self) -> float:
        """Half-width of the region where f differs from its tail formula."""
        return self.pieces[-1].right

    @property
    def symmetry(self) -> int:
        """-1 if f is odd (even case), +1 if f is even (odd case)."""
        return -1 if self.parity == EVEN else 1

    @property
    def scale_power(self) -> int:
        """Exponent e in f_eps(x) = eps**(-e) f(x/eps)."""
        return 2 * self.k - 1 if self.parity == EVEN else 2 * self.k

    @property
    def m(self) -> int:
        return 2 * self.k if self.parity == EVEN else 2 * self.k + 1

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(p.right for p in self.pieces)

    def piece_derivative(self, index: int, t, order: int):
        """Derivative of one polynomial piece (evaluated even outside its interval)."""
        return self.pieces[index].derivative(t, order)

    def with_tail(self, tail: Tail) -> "Profile":
        return replace(self, tail=tail)


def _check_order(p: Profile, order: int):
    if order < 0 or order > p.max_derivative_order:
        raise ProfileError(f"derivative order {order} outside 0..{p.max_derivative_order}")


def eval_profile(p: Profile, t, order: int = 0):
    """Exact ``d^order f / dt^order`` at t (scalar or array)."""
    _check_order(p, order)
    t_arr = np.asarray(t, dtype=float)
    s = np.abs(t_arr)
    out = np.empty_like(s)
    done = np.zeros(s.shape, dtype=bool)
    for piece in p.pieces:
        mask = ~done & (s <= piece.right)
        if np.any(mask):
            out[mask] = piece.derivative(s[mask], order)
        done |= mask
    rest = ~done
    if np.any(rest):
        out[rest] = p.tail.derivative(s[rest], order)
    # f(-s) = sym * f(s)  =>  f^(r)(-s) = sym * (-1)^r f^(r)(s)
    flip = p.symmetry * (-1.0) ** order
    out = np.where(t_arr < 0, flip * out, out)
    return out if out.ndim else float(out)


def eval_scaled(p: Profile, eps: float, x, order: int = 0):
    """``d^order f_eps / dx^order`` with f_eps(x) = eps**(-e) f(x/eps)."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    _check_order(p, order)
    x = np.asarray(x, dtype=float)
    pref = eps ** (-(p.scale_power + order))
    out = pref * np.asarray(eval_profile(p, x / eps, order))
    return out if out.ndim else float(out)


def reciprocal_derivative(p: Profile, t, order: int = 0):
    """Derivatives of g = 1/f' for an even-case profile.

    Uses the Leibniz identity for f' g = 1, so each g^(j) comes from exact
    derivatives of f' only.
    """
    if p.parity != EVEN:
        raise ProfileError("g = 1/f' is only defined for even-case profiles")
    if order + 1 > p.max_derivative_order:
        raise ProfileError(f"g^({order}) needs f^({order + 1}), beyond the profile's order")
    fp = [np.asarray(eval_profile(p, t, r + 1), dtype=float) for r in range(order + 1)]
    if np.any(fp[0] <= 0):
        raise ProfileError("f' <= 0 encountered; profile is invalid")
    g = [1.0 / fp[0]]
    for j in range(1, order + 1):
        acc = sum(math.comb(j, i) * fp[i] * g[j - i] for i in range(1, j + 1))
        g.append(-acc / fp[0])
    out = g[order]
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _even_tail(k: int, offset: float = 2.0) -> Tail:
    return Tail(-1.0 / (2 * k - 1), 2 * k - 1, offset)


def _odd_tail(k: int, tail_mode: str) -> Tail:
    if k == 0:
        return Tail(1.0, None, 0.0)
    if tail_mode == CORRECTED:
        return Tail(-1.0 / (2 * k), 2 * k, 0.0)
    if tail_mode == LITERAL_TAIL:
        return Tail(-1.0 / (2 * k + 2), 2 * k + 2, 0.0)
    raise ValueError(f"unknown tail mode {tail_mode!r}")


def _bernstein_u_coefficients(k: int, J: int, D: int) -> list[Fraction] | None:
    """Exact Bernstein coefficients (in u = t^2) of f' for degree D, or None."""
    b = [Fraction(0)] * (D + 1)
    fixed = [False] * (D + 1)
    for r in range(J):
        # P^(r)(1) = D!/(D-r)! * sum_{i<=r} (-1)^i C(r,i) b_{D-i}
        target = Fraction(math.prod(-k - i for i in range(r)), math.perm(D, r))
        acc = sum((-1) ** i * math.comb(r, i) * b[D - i] for i in range(r))
        b[D - r] = (target - acc) * (-1) ** r
        fixed[D - r] = True
    if all(fixed):
        return None
    # int_0^1 B_{j,D}(t^2) dt
    weights = [math.comb(D, j) * sum(Fraction((-1) ** l * math.comb(D - j, l), 2 * j + 2 * l + 1)
                                     for l in range(D - j + 1)) for j in range(D + 1)]
    norm = 2 - Fraction(1, 2 * k - 1)
    c = (norm - sum(w * v for w, v, f in zip(weights, b, fixed) if f)) \
        / sum(w for w, f in zip(weights, fixed) if not f)
    b = [v if f else c for v, f in zip(b, fixed)]
    return b if all(v > 0 for v in b) else None


def _u_bernstein_in_t(b: list[Fraction]) -> list[Fraction]:
    """Power-basis coefficients in t of sum_j b_j B_{j,D}(t^2)."""
    D = len(b) - 1
    one_minus_t2 = [Fraction(1), Fraction(0), Fraction(-1)]
    out: list[Fraction] = [Fraction(0)]
    for j, bj in enumerate(b):
        term = xp.mul([Fraction(0)] * (2 * j) + [Fraction(math.comb(D, j)) * bj],
                      xp.power(one_minus_t2, D - j))
        out = xp.add(out, term)
    return out


def build_even_profile(k: int, J: int | None = None) -> Profile:
    """Profile for m = 2k with f' matching t^(-2k) to J-1 derivatives at t = 1."""
    if k < 1:
        raise ValueError("even-case profiles need k >= 1")
    J = 2 * k + 2 if J is None else J
    if J < 1:
        raise ValueError("junction order J must be >= 1")
    requested = J
    while True:
        b = None
        for D in range(J, MAX_BERNSTEIN_DEGREE + 1):
            b = _bernstein_u_coefficients(k, J, D)
            if b is not None:
                break
        if b is not None:
            break
        if J == 1:
            raise ProfileError(f"no positive normalized f' found for k={k} "
                               f"(positivity/normalization infeasible up to degree {MAX_BERNSTEIN_DEGREE})")
        warnings.warn(f"positivity failed for J={J}; reducing junction order", RuntimeWarning)
        J -= 1
    order = max(2 * k + 2, J + 1)
    f = xp.antideriv(_u_bernstein_in_t(b))
    return Profile(
        parity=EVEN, k=k, J=J, tail_mode=CORRECTED,
        pieces=(PolyPiece(0, 1, f, order),),
        tail=_even_tail(k),
        max_derivative_order=order,
        info={"bernstein_degree_u": len(b) - 1, "requested_J": requested,
              "free_coefficient": float(b[0])},
    )


def _exact_tail_jet(k: int, tail_mode: str, t: int, orders: int) -> list[Fraction]:
    """Exact derivatives 0..orders-1 of the odd-case tail at integer t > 0."""
    if k == 0:
        jet = [Fraction(math.log(t))]
        jet += [Fraction((-1) ** (r - 1) * math.factorial(r - 1), t**r) for r in range(1, orders)]
        return jet
    p = 2 * k if tail_mode == CORRECTED else 2 * k + 2
    scale = Fraction(-1, p)
    return [scale * math.prod(-p - i for i in range(r)) / Fraction(t) ** (p + r) for r in range(orders)]


def build_odd_profile(k: int, J: int | None = None, tail_mode: str = CORRECTED) -> Profile:
    """Profile for m = 2k+1: -t^2+2 on [0,1], Hermite bridge on [1,2], tail beyond."""
    if k < 0:
        raise ValueError("odd-case profiles need k >= 0")
    J = 2 * k + 2 if J is None else J
    if J < 1:
        raise ValueError("junction order J must be >= 1")
    tail = _odd_tail(k, tail_mode)
    order = max(2 * k + 2, J + 1)
    inner = [Fraction(2), Fraction(0), Fraction(-1)]
    left = [xp.evaluate(xp.deriv(inner, r), 1) for r in range(J + 1)]
    right = _exact_tail_jet(k, tail_mode, 2, J + 1)
    bridge = xp.hermite(1, left, right)
    return Profile(
        parity=ODD, k=k, J=J, tail_mode=tail_mode if k > 0 else CORRECTED,
        pieces=(PolyPiece(0, 1, inner, order), PolyPiece(1, 2, bridge, order)),
        tail=tail,
        max_derivative_order=order,
    )


def build_profile(m: int, J: int | None = None, tail_mode: str = CORRECTED) -> Profile:
    """Profile matching singularity order m."""
    if m < 1:
        raise ValueError("singularity order m must be >= 1")
    if m % 2 == 0:
        return build_even_profile(m // 2, J)
    return build_odd_profile((m - 1) // 2, J, tail_mode)


def reference_tail(p: Profile) -> Tail:
    """Tail formula the profile is supposed to carry."""
    if p.parity == EVEN:
        return _even_tail(p.k)
    return _odd_tail(p.k, p.tail_mode)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def junction_mismatch(p: Profile, order: int) -> float:
    """Largest relative jump of f^(order) across the piece boundaries."""
    worst = 0.0
    n = len(p.pieces)
    for i, piece in enumerate(p.pieces):
        right = piece.right
        a = float(p.piece_derivative(i, right, order))
        b = float(p.piece_derivative(i + 1, right, order)) if i + 1 < n \
            else float(p.tail.derivative(right, order))
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst


def fprime_roots(p: Profile, lo: float, hi: float, samples: int = 4097) -> list[float]:
    """Sign changes of f' on [lo, hi], refined by bisection."""
    t = np.linspace(lo, hi, samples)
    v = np.asarray(eval_profile(p, t, 1))
    roots = []
    for i in range(samples - 1):
        if v[i] == 0.0:
            roots.append(float(t[i]))
        elif v[i] * v[i + 1] < 0:
            a, b = t[i], t[i + 1]
            fa = v[i]
            while b - a > 1e-14:
                mid = 0.5 * (a + b)
                fm = eval_profile(p, mid, 1)
                if fm == 0.0:
                    a = b = mid
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = mid, fm
                else:
                    b = mid
            roots.append(0.5 * (a + b))
    return roots


def validate_profile(p: Profile, tol: float = 1e-9) -> CheckReport:
    """Check symmetry, interior formula, tails, junction smoothness and signs."""
    rng = np.random.default_rng(0)
    ms: list[Measurement] = []
    notes: list[str] = []
    t = rng.uniform(-3 * p.support, 3 * p.support, 1000)
    sym = np.max(np.abs(np.asarray(eval_profile(p, -t)) - p.symmetry * np.asarray(eval_profile(p, t))))
    ms.append(Measurement("symmetry defect", float(sym), 1e-14, "<="))

    ref = reference_tail(p)
    far = np.linspace(p.support * (1 + 1e-9), 6 * p.support, 257)
    tail_err = np.max(np.abs(np.asarray(eval_profile(p, far)) - ref.derivative(far, 0)))
    ms.append(Measurement("tail deviation from closed form", float(tail_err), tol, "<="))

    for r in range(p.J + 1):
        ms.append(Measurement(f"junction mismatch order {r}", junction_mismatch(p, r), tol, "<"))

    if p.parity == EVEN:
        ms.append(Measurement("f(0)", abs(float(eval_profile(p, 0.0))), 1e-14, "<="))
        norm = 2.0 - 1.0 / (2 * p.k - 1)
        ms.append(Measurement("normalization defect f(1) - (2 - 1/(2k-1))",
                              abs(float(p.piece_derivative(0, 1.0, 0)) - norm), tol, "<="))
        grid = np.linspace(-1.0, 1.0, POSITIVITY_SAMPLES + 1)
        ms.append(Measurement("min f' on [-1,1]", float(np.min(eval_profile(p, grid, 1))), 0.0, ">"))
    else:
        grid = np.linspace(-1.0, 1.0, 2001)
        interior = np.max(np.abs(np.asarray(eval_profile(p, grid)) - (2.0 - grid**2)))
        ms.append(Measurement("interior deviation from -t^2+2", float(interior), 1e-13, "<="))
        ms.append(Measurement("|f'(0)|", abs(float(eval_profile(p, 0.0, 1))), 1e-14, "<="))
        ms.append(Measurement("|f''(0) + 2|", abs(float(eval_profile(p, 0.0, 2)) + 2.0), 1e-12, "<="))
        left = np.linspace(-1.0, -1e-6, 1001)
        ms.append(Measurement("min f' on [-1,0)", float(np.min(eval_profile(p, left, 1))), 0.0, ">"))
        roots = fprime_roots(p, 1.0, 2.0)
        ms.append(Measurement("f' sign changes in (1,2)", float(len(roots))))
        if roots:
            notes.append("f' changes sign inside the bridge at t = "
                         + ", ".join(f"{r:.12g}" for r in roots))
    return CheckReport(f"profile[{p.parity}, k={p.k}, J={p.J}, tail={p.tail_mode}]",
                       tuple(ms), tol, tuple(notes))
