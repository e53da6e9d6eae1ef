"""Liouville volumes of the singular and desingularized forms, and their expansion in eps.

Both volumes reduce to one-dimensional x-integrals. With
top(omega_eps^n) = F(x) P + Q and p(x), q(x) the angle integrals of P and Q,

    vol(omega_eps) = int_{-1}^{1} F(x) p(x) dx + int_{-1}^{1} q(x) dx,

where F = f_eps' inside the band and F = x^(-m) wherever the tail coincides
with the singular coefficient. For polynomial data p and q are Laurent
polynomials in x and every outside integral is an exact antiderivative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _exactpoly as xp
from .desing import check_parity, top_parts
from .errors import ConditioningError, ParityMismatchError, UnsupportedError
from .forms import Form, TrigPoly, wedge
from .model import LaurentModel
from .profile import EVEN, Profile, eval_profile
from .quadrature import adaptive_gauss_legendre, torus_trapezoid

QUAD_TOL = 1e-10
MAX_CONDITION = 1e12
FITTED = "fitted"
PREDICTED = "predicted"


# ---------------------------------------------------------------------------
# Moment integrals of the profile
# ---------------------------------------------------------------------------


def moment_integrals_exact(profile: Profile, i_max: int) -> list[Fraction]:
    """I_i = int_{-1}^{1} f'(y) y^i dy as exact rationals, i = 0..i_max."""
    if profile.parity != EVEN:
        raise ParityMismatchError("moment integrals are defined for even-case profiles")
    if i_max < 0:
        raise ValueError("i_max must be >= 0")
    out = []
    for i in range(i_max + 1):
        mono = [Fraction(0)] * i + [Fraction(1)]
        right = Fraction(0)
        left = Fraction(0)
        for piece in profile.pieces:
            lo, hi = Fraction(piece.left), Fraction(piece.right)
            fp = xp.deriv(piece.exact_in_t())
            right += xp.integrate(xp.mul(fp, mono), lo, hi)
            # f(-t) = -f(t), so f' on [-hi, -lo] is t -> f'(-t)
            reflected = [c * (-1) ** r for r, c in enumerate(fp)]
            left += xp.integrate(xp.mul(reflected, mono), -hi, -lo)
        out.append(left + right)
    return out


def moment_integrals(profile: Profile, i_max: int) -> list[float]:
    return [float(v) for v in moment_integrals_exact(profile, i_max)]


# ---------------------------------------------------------------------------
# Angle integrals and exact x-integrals
# ---------------------------------------------------------------------------


def _laurent_coeffs(field_) -> dict[int, float] | None:
    """{power: coefficient} of the angle integral, or None for opaque fields."""
    if isinstance(field_, TrigPoly):
        return {p: c for p, c in field_.torus_integral().items() if c != 0.0}
    return None


def _angle_integral_fn(field_, nangles: int):
    coeffs = _laurent_coeffs(field_)
    if coeffs is not None:
        def fn(x):
            x = np.asarray(x, dtype=float)
            return sum((c * x ** float(p) for p, c in coeffs.items()), np.zeros_like(x))
        return fn

    def fn(x):
        x = np.asarray(x, dtype=float)
        flat = [torus_trapezoid(field_, nangles, 64, float(v)) for v in x.ravel()]
        return np.asarray(flat).reshape(x.shape)
    return fn


def _power_integral(e: int, a: float, b: float) -> float:
    """int_a^b x^e dx for 0 < a <= b."""
    if e == -1:
        return math.log(b / a)
    return (b ** (e + 1) - a ** (e + 1)) / (e + 1)


def _symmetric_outside(e: int, eps: float) -> float:
    """int over eps <= |x| <= 1 of x^e."""
    if e % 2:
        return 0.0
    return 2.0 * _power_integral(e, eps, 1.0)


def _outside_integral(coeffs: dict[int, float] | None, fn, shift: int, eps: float) -> float:
    if coeffs is not None:
        return sum(c * _symmetric_outside(p + shift, eps) for p, c in coeffs.items())
    g = lambda x: fn(x) * np.asarray(x, dtype=float) ** float(shift)
    return (adaptive_gauss_legendre(g, eps, 1.0, QUAD_TOL)
            + adaptive_gauss_legendre(g, -1.0, -eps, QUAD_TOL))


def volume_complement(model: LaurentModel, eps: float) -> float:
    """int of omega^n over eps <= |x| < 1."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    P, Q = top_parts(model)
    nang = model.nangles
    pc, qc = _laurent_coeffs(P), _laurent_coeffs(Q)
    return (_outside_integral(pc, _angle_integral_fn(P, nang), -model.m, eps)
            + _outside_integral(qc, _angle_integral_fn(Q, nang), 0, eps))


@dataclass(frozen=True)
class VolumeParts:
    eps: float
    band: float
    complement: float
    inside: float

    @property
    def total(self) -> float:
        return self.complement + self.inside


def _tail_coincides(profile: Profile) -> bool:
    t = np.array([1.0, 1.7, 3.0, 10.0]) + profile.support
    fp = np.asarray(eval_profile(profile, t, 1))
    return bool(np.allclose(fp, t ** (-float(profile.m)), rtol=1e-13, atol=0.0))


def volume_parts(model: LaurentModel, profile: Profile, eps: float) -> VolumeParts:
    """Split of vol(omega_eps) into the band |x| <= support*eps and its complement."""
    check_parity(model, profile)
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    P, Q = top_parts(model)
    nang = model.nangles
    p_fn, q_fn = _angle_integral_fn(P, nang), _angle_integral_fn(Q, nang)
    s = profile.support
    band = s * eps
    e = profile.scale_power

    def inner(y):
        y = np.asarray(y, dtype=float)
        return eps ** (-e) * np.asarray(eval_profile(profile, y, 1)) * p_fn(eps * y)

    brk = sorted({0.0} | {b for b in profile.breakpoints} | {-b for b in profile.breakpoints})
    inside = adaptive_gauss_legendre(inner, -s, s, QUAD_TOL / 10, breakpoints=brk)
    qc = _laurent_coeffs(Q)
    if qc is not None:
        inside += sum(c * (band ** (p + 1) - (-band) ** (p + 1)) / (p + 1) for p, c in qc.items())
    else:
        inside += adaptive_gauss_legendre(q_fn, -band, band, QUAD_TOL)

    if _tail_coincides(profile):
        outside = volume_complement(model, band)
    else:
        def outer(x):
            x = np.asarray(x, dtype=float)
            return np.asarray(eval_profile(profile, x / eps, 1)) * eps ** (-e - 1) * p_fn(x) + q_fn(x)
        outside = (adaptive_gauss_legendre(outer, band, 1.0, QUAD_TOL)
                   + adaptive_gauss_legendre(outer, -1.0, -band, QUAD_TOL))
    return VolumeParts(eps, band, outside, inside)


def volume_desingularized(model: LaurentModel, profile: Profile, eps: float) -> float:
    """int of omega_eps^n over Z x (-1, 1)."""
    return volume_parts(model, profile, eps).total


# ---------------------------------------------------------------------------
# Expansion in eps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeExpansion:
    """V(eps) ~ sum_{i=1..k} d_i eps^{-(2i-1)} + d_0.

    ``coefficients`` is (d_0, d_1, ..., d_k).
    """

    k: int
    coefficients: tuple[float, ...]
    residual: float
    provenance: str
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.coefficients) != self.k + 1:
            raise ValueError("coefficient list must have length k+1")
        if not self.residual >= 0.0:
            raise ValueError("residual must be >= 0")

    @property
    def d0(self) -> float:
        return self.coefficients[0]

    def d(self, i: int) -> float:
        return self.coefficients[i]

    @property
    def leading(self) -> float:
        return self.coefficients[self.k]

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        out = self.d0 + sum(self.coefficients[i] * eps ** (-(2 * i - 1)) for i in range(1, self.k + 1))
        for power, c in self.extras.get("positive_powers", {}).items():
            out = out + c * eps ** power
        return out


def _z_top_integral(form: Form) -> float:
    top = form.coeffs.get(tuple(range(1, form.dim)))
    if top is None:
        return 0.0
    if not isinstance(top, TrigPoly):
        raise UnsupportedError("exact Z-integrals need trig-polynomial data")
    return top.torus_integral().get(0, 0.0)


def z_integrals(model: LaurentModel) -> dict[tuple, float]:
    """Nonzero int_Z alpha_{j1} ^ beta_{j2} ^ ... ^ beta_{jn}, keyed by (j1, (j2, ..., jn))."""
    out = {}
    for j1, a in enumerate(model.alphas):
        if a.is_zero():
            continue
        for js in itertools.combinations_with_replacement(range(model.m), model.n - 1):
            form = a
            for j in js:
                form = wedge(form, model.betas[j])
            val = _z_top_integral(form)
            if val != 0.0:
                out[(j1, js)] = val
    return out


def stated_leading_constant(k: int, leaf_integral: float) -> float:
    """2 (2 + 1/(2k-1)) int_Z alpha_0 ^ beta_0^(n-1)."""
    return 2.0 * (2.0 + 1.0 / (2 * k - 1)) * leaf_integral


def oracle_leading_constant(k: int, n: int, leaf_integral: float) -> float:
    """Leading coefficient from exact endpoint evaluation: 4 n int_Z alpha_0 ^ beta_0^(n-1)."""
    return 4.0 * n * leaf_integral


def predicted_expansion(model: LaurentModel, profile: Profile, offset: float = 0.0) -> VolumeExpansion:
    """Closed-form expansion of vol(omega_eps) for polynomial data, even case."""
    check_parity(model, profile)
    if profile.parity != EVEN:
        raise UnsupportedError("the closed-form expansion is implemented for the even case")
    if not model.is_polynomial():
        raise UnsupportedError("closed-form expansion needs trig-polynomial Laurent data")
    k, m = profile.k, profile.m
    P, Q = top_parts(model)
    p = _laurent_coeffs(P) or {}
    q = _laurent_coeffs(Q) or {}
    if any(l < 0 for l in p) or any(l < 0 for l in q):
        raise UnsupportedError("negative powers of x in the regular part")
    top_l = max(p, default=0)
    I = moment_integrals(profile, max(top_l, m))
    d = [0.0] * (k + 1)
    positive: dict[int, float] = {}
    for i in range(1, k + 1):
        l = m - 2 * i
        d[i] = p.get(l, 0.0) * (I[l] + 2.0 / (2 * i - 1))
    d0 = offset
    for l, c in p.items():
        if (l - m) % 2:
            continue  # odd l: inside moment and outside integral both vanish
        d0 += c * 2.0 / (l - m + 1)
        if l > m - 1:
            power = l - m + 1
            positive[power] = positive.get(power, 0.0) + c * (I[l] - 2.0 / (l - m + 1))
    d0 += sum(c * (1.0 - (-1.0) ** (l + 1)) / (l + 1) for l, c in q.items())
    d[0] = d0
    zi = z_integrals(model)
    leaf = zi.get((0, (0,) * (model.n - 1)), 0.0)
    extras = {
        "positive_powers": positive,
        "z_integrals": zi,
        "leaf_integral": leaf,
        "stated_leading": stated_leading_constant(k, leaf),
        "oracle_leading": oracle_leading_constant(k, model.n, leaf),
        "moment_integrals": I,
    }
    return VolumeExpansion(k, tuple(d), 0.0, PREDICTED, extras)


def fit_expansion(samples, k: int, augmented: bool = False) -> VolumeExpansion:
    """Weighted least-squares fit of V(eps) in the basis {eps^-(2i-1)} and 1.

    Rows are weighted by 1/V so the constant term stays identifiable.
    With ``augmented`` the even powers eps^-2i (i = 1..k) are added; their
    coefficients are returned in ``extras['even_powers']``.
    """
    samples = sorted(((float(e), float(v)) for e, v in samples), reverse=True)
    eps = np.array([s[0] for s in samples])
    vol = np.array([s[1] for s in samples])
    ncols = k + 1 + (k if augmented else 0)
    if len(set(eps)) < max(k + 2, ncols + 1):
        raise ConditioningError(f"need at least {max(k + 2, ncols + 1)} distinct eps samples")
    if np.any(eps <= 0) or np.any(vol == 0):
        raise ValueError("eps must be positive and volumes nonzero")
    cols = [np.ones_like(eps)] + [eps ** (-(2 * i - 1)) for i in range(1, k + 1)]
    if augmented:
        cols += [eps ** (-2 * i) for i in range(1, k + 1)]
    A = np.stack(cols, axis=1)
    w = 1.0 / np.abs(vol)
    Aw = A * w[:, None]
    norms = np.linalg.norm(Aw, axis=0)
    cond = np.linalg.cond(Aw / norms)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ConditioningError(f"eps range too narrow for the basis (condition {cond:.3g})")
    sol, *_ = np.linalg.lstsq(Aw / norms, vol * w, rcond=None)
    sol = sol / norms
    resid = float(np.max(np.abs(A @ sol - vol) / np.abs(vol)))
    extras = {"condition": float(cond)}
    if augmented:
        extras["even_powers"] = tuple(float(c) for c in sol[k + 1:])
    return VolumeExpansion(k, tuple(float(c) for c in sol[:k + 1]), resid, FITTED, extras)


def volume_table(model: LaurentModel, profile: Profile, eps_ladder, offset: float = 0.0):
    """Rows (eps, complement, inside, total, predicted total) over the ladder."""
    try:
        pred = predicted_expansion(model, profile, offset)
    except UnsupportedError:
        pred = None
    rows = []
    for e in eps_ladder:
        parts = volume_parts(model, profile, float(e))
        predicted = float(pred(e)) if pred is not None else float("nan")
        rows.append((float(e), parts.complement, parts.inside, parts.total + offset, predicted))
    return rows
