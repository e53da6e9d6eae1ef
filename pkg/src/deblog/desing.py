"""Desingularized forms omega_eps and the checks run on them.

omega_eps replaces dx/x^m by d f_eps in the Laurent form:

    omega_eps = f_eps'(x) dx ^ (sum_i x^i alpha_i) + beta.

Because (dx ^ A)^2 = 0, its top power splits as

    top(omega_eps^n) = f_eps'(x) * P(x, theta) + Q(x, theta),
    P = top(n dx ^ A ^ beta^(n-1)),   Q = top(beta^n),

and P, Q are exact Laurent trig polynomials for polynomial data. Grid checks
evaluate omega_eps^n directly with :func:`wedge_power`; the split is used for
exact x-derivatives and volume integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartDomainError, DegeneracyError, ParityMismatchError
from .forms import (
    ChartPoint,
    Form,
    FormValue,
    FuncField,
    ScalarField,
    TrigPoly,
    evaluate,
    evaluate_grid,
    exterior_derivative_grid,
    top_coefficient,
    wedge,
    wedge_power,
)
from .model import LaurentModel, leaf_factor, z_grid
from .profile import EVEN, ODD, Profile, eval_scaled, reciprocal_derivative
from .report import CheckReport, Measurement

COINCIDENCE_TOL = 1e-11
FOLD_ZERO_TOL = 1e-10
TRANSVERSAL_FACTOR = 1e-6
CLOSEDNESS_REL_TOL = 1e-5


def check_parity(model: LaurentModel, profile: Profile):
    if profile.m != model.m:
        raise ParityMismatchError(
            f"profile ({profile.parity}, k={profile.k}) desingularizes m={profile.m}, model has m={model.m}")


@dataclass(frozen=True)
class DesingularizedForm:
    model: LaurentModel
    profile: Profile
    eps: float

    def __post_init__(self):
        check_parity(self.model, self.profile)
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def band(self) -> float:
        """Half-width of the band where omega_eps may differ from omega."""
        return self.profile.support * self.eps

    def fprime(self, x, order: int = 1):
        """d^order f_eps / dx^order (order >= 1)."""
        return eval_scaled(self.profile, self.eps, x, order)

    def fprime_field(self) -> FuncField:
        nang = self.model.nangles
        f1 = lambda x, th: np.asarray(self.fprime(x, 1)) * np.ones(np.broadcast_shapes(np.shape(x), *(np.shape(t) for t in th)))
        f2 = lambda x, th: np.asarray(self.fprime(x, 2)) * np.ones(np.broadcast_shapes(np.shape(x), *(np.shape(t) for t in th)))
        return FuncField(f1, nang, self.profile.max_derivative_order - 1, deriv_x=f2)

    def form(self) -> Form:
        dfe = Form.basis(self.dim, 0, coeff=self.fprime_field())
        return wedge(dfe, self.model.alpha_sum()) + self.model.beta_form()

    def value(self, p: ChartPoint) -> FormValue:
        return evaluate(self.form(), p)

    def value_grid(self, x, thetas) -> FormValue:
        return evaluate_grid(self.form(), x, thetas)

    def top_grid(self, x, thetas):
        """top(omega_eps^n) by direct exterior algebra on a grid."""
        return top_coefficient(wedge_power(self.value_grid(x, thetas), self.model.n))

    def top_parts(self) -> tuple[ScalarField, ScalarField]:
        return top_parts(self.model)

    def top_split(self, x, thetas):
        P, Q = self.top_parts()
        return np.asarray(self.fprime(x, 1)) * P(x, thetas) + Q(x, thetas)

    def top_x_derivative(self, x, thetas):
        """Exact d/dx of top(omega_eps^n) for polynomial models."""
        P, Q = self.top_parts()
        x = np.asarray(x, dtype=float)
        return (np.asarray(self.fprime(x, 2)) * P(x, thetas)
                + np.asarray(self.fprime(x, 1)) * P.dx()(x, thetas)
                + Q.dx()(x, thetas))


_TOP_PARTS_CACHE: dict[int, tuple] = {}


def top_parts(model: LaurentModel) -> tuple[ScalarField, ScalarField]:
    """(P, Q) with top(omega_eps^n) = f_eps' P + Q."""
    key = id(model)
    hit = _TOP_PARTS_CACHE.get(key)
    if hit is not None and hit[0] is model:
        return hit[1]
    dim, n = model.dim, model.n
    zero = TrigPoly.constant(0.0, model.nangles)
    B = model.beta_form()
    lead = wedge(wedge(Form.basis(dim, 0), model.alpha_sum()), wedge_power(B, n - 1)).scale(float(n))
    top_idx = tuple(range(dim))
    P = lead.coeffs.get(top_idx, zero)
    Q = wedge_power(B, n).coeffs.get(top_idx, zero)
    _TOP_PARTS_CACHE[key] = (model, (P, Q))
    return P, Q


def desingularize(model: LaurentModel, profile: Profile, eps: float, p: ChartPoint) -> FormValue:
    """Value of omega_eps at p."""
    return DesingularizedForm(model, profile, eps).value(p)


def symmetric_scan(half_width: float, points: int) -> np.ndarray:
    """Scan grid symmetric about 0 that contains 0 exactly."""
    half = np.linspace(0.0, half_width, points // 2 + 1)[1:]
    return np.concatenate([-half[::-1], [0.0], half])


def x_grid(eps: float, band_factor: float = 1.0, points: int = 401, x_max: float = 0.99) -> np.ndarray:
    """Clustered grid: uniform in x/eps inside the band, uniform outside."""
    band = band_factor * eps
    inner_n = points // 2 | 1
    outer_n = max((points - inner_n) // 2, 2)
    inner = np.linspace(-band, band, inner_n)
    outer = np.linspace(band, x_max, outer_n + 1)[1:]
    return np.concatenate([-outer[::-1], inner, outer])


def _full_grid(model: LaurentModel, xs: np.ndarray, theta_points: int):
    th = z_grid(model, theta_points)
    nang = model.nangles
    X = xs.reshape((-1,) + (1,) * nang)
    TH = [t[None, ...] for t in th]
    return X, TH


def _closedness_measure(df: DesingularizedForm, n_points: int = 8, h: float = 1e-4, seed: int = 0):
    if df.dim <= 2:
        return 0.0  # a top-degree form is closed
    rng = np.random.default_rng(seed)
    xs = np.concatenate([rng.uniform(-df.eps, df.eps, n_points // 2),
                         rng.uniform(-0.9, 0.9, n_points - n_points // 2)])
    th = [rng.uniform(0, 2 * np.pi, n_points) for _ in range(df.model.nangles)]
    form = df.form()
    d = exterior_derivative_grid(form, xs, th, h)
    scale = np.maximum(1.0, np.asarray(evaluate_grid(form, xs, th).max_abs()))
    rel = np.asarray(d.max_abs()) / scale if d.coeffs else np.zeros(n_points)
    return float(np.max(rel))


def check_symplectic(model: LaurentModel, profile: Profile, eps: float,
                     x_points: int = 401, theta_points: int = 16) -> CheckReport:
    """omega_eps^n nowhere zero with constant sign, and omega_eps closed."""
    if profile.parity != EVEN:
        raise ParityMismatchError("symplecticity is checked for even-case desingularizations")
    df = DesingularizedForm(model, profile, eps)
    xs = x_grid(eps, 1.0, x_points)
    X, TH = _full_grid(model, xs, theta_points)
    top = np.broadcast_to(np.asarray(df.top_grid(X, TH), dtype=float),
                          np.broadcast_shapes(X.shape, *(t.shape for t in TH)))
    absmin = float(np.min(np.abs(top)))
    inband = np.abs(xs) <= eps
    band_min = float(np.min(np.abs(top[inband])))
    signs = np.unique(np.sign(top))
    constant = 1.0 if (len(signs) == 1 and signs[0] != 0) else 0.0
    ms = [
        Measurement("min |top(omega_eps^n)| on grid", absmin, 0.0, ">"),
        Measurement("sign constant", constant, 0.5, ">"),
        Measurement("min |top(omega_eps^n)| for |x| <= eps", band_min),
        Measurement("relative closedness residual", _closedness_measure(df), CLOSEDNESS_REL_TOL, "<="),
    ]
    return CheckReport(f"symplectic eps={eps:g} ({model.label})", tuple(ms), 0.0)


def band_minimum(model: LaurentModel, profile: Profile, eps: float,
                 x_points: int = 401, theta_points: int = 16) -> float:
    return check_symplectic(model, profile, eps, x_points, theta_points) \
        .get("min |top(omega_eps^n)| for |x| <= eps")


def loglog_slope(xs, ys) -> float:
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def check_coincidence(model: LaurentModel, profile: Profile, eps: float,
                      outer_grid=None, theta_points: int = 16,
                      tol: float = COINCIDENCE_TOL) -> CheckReport:
    """max |omega_eps - omega| on a grid outside the band."""
    df = DesingularizedForm(model, profile, eps)
    if outer_grid is None:
        lo = 1.2 * df.band
        half = np.linspace(lo, 0.9, 101)
        outer_grid = np.concatenate([-half[::-1], half])
    xs = np.asarray(outer_grid, dtype=float)
    if np.any(np.abs(xs) <= df.band):
        raise ChartDomainError(f"coincidence grid enters the band |x| <= {df.band:g}")
    X, TH = _full_grid(model, xs, theta_points)
    diff = df.value_grid(X, TH) - evaluate_grid(model.omega_form(), X, TH)
    dev = float(np.max(diff.max_abs())) if diff.coeffs else 0.0
    ms = [Measurement("max |omega_eps - omega|", dev, tol, "<")]
    return CheckReport(f"coincidence eps={eps:g} ({model.label}, tail={profile.tail_mode})",
                       tuple(ms), tol)


def invert_to_bivector(v: FormValue, cond_limit: float = 1e13) -> np.ndarray:
    """Poisson bivector matrix Pi = -W^{-1} of a nondegenerate 2-form value.

    With this sign, omega = F dx ^ dy gives Pi[x, y] = +1/F.
    """
    if v.dim % 2:
        raise DegeneracyError("2-forms on odd-dimensional charts are never invertible")
    W = v.to_matrix()
    cond = np.linalg.cond(W)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_limit):
        raise DegeneracyError("2-form is degenerate (singular coefficient matrix)")
    return -np.linalg.inv(W)


@dataclass(frozen=True)
class ConvergenceTable:
    k: int
    rows: tuple[tuple[float, int, float], ...]
    slopes: dict
    outside_deviation: dict = field(default_factory=dict)

    def sup(self, eps: float, j: int) -> float:
        for e, jj, s in self.rows:
            if e == eps and jj == j:
                return s
        raise KeyError((eps, j))


def convergence_report(profile: Profile, eps_ladder, j_max: int | None = None,
                       samples: int = 4001) -> ConvergenceTable:
    """Sup norms of d^j/dx^j (eps^{2k} g(x/eps) - x^{2k}) on [-eps, eps], g = 1/f'."""
    if profile.parity != EVEN:
        raise ParityMismatchError("bivector convergence is defined for even-case profiles")
    k = profile.k
    j_max = 2 * k - 1 if j_max is None else j_max
    if j_max > 2 * k - 1:
        raise ValueError(f"j_max={j_max} exceeds 2k-1={2 * k - 1}")
    eps_ladder = [float(e) for e in eps_ladder]
    if any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise ValueError("eps ladder must be strictly decreasing")
    t = np.linspace(-1.0, 1.0, samples)
    t_out = np.concatenate([-np.geomspace(1.0 + 1e-9, 50.0, 200)[::-1], np.geomspace(1.0 + 1e-9, 50.0, 200)])
    rows, outside = [], {}
    for eps in eps_ladder:
        for j in range(j_max + 1):
            gj = np.asarray(reciprocal_derivative(profile, t, j))
            target = math.perm(2 * k, j) * (eps * t) ** (2 * k - j)
            sup = float(np.max(np.abs(eps ** (2 * k - j) * gj - target)))
            rows.append((eps, j, sup))
            go = np.asarray(reciprocal_derivative(profile, t_out, j))
            x_out = eps * t_out
            exact = math.perm(2 * k, j) * x_out ** (2 * k - j)
            rel = np.abs(eps ** (2 * k - j) * go - exact) / np.maximum(np.abs(exact), 1e-300)
            outside[(eps, j)] = float(np.max(rel))
    slopes = {}
    for j in range(j_max + 1):
        e = [r[0] for r in rows if r[1] == j]
        s = [r[2] for r in rows if r[1] == j]
        slopes[j] = loglog_slope(e, s) if len(e) > 1 else float("nan")
    return ConvergenceTable(k, tuple(rows), slopes, outside)


def check_folded(model: LaurentModel, profile: Profile, eps: float,
                 theta_points: int = 16) -> CheckReport:
    """Fold along Z: top vanishes on Z, does so transversally, and (i*omega_eps)^(n-1) != 0."""
    if profile.parity != ODD:
        raise ParityMismatchError("fold checks apply to odd-case desingularizations")
    df = DesingularizedForm(model, profile, eps)
    th = z_grid(model, theta_points)
    shape = th[0].shape if th else ()
    zero = np.zeros(shape)
    top0 = np.asarray(df.top_grid(zero, th), dtype=float)
    dtop = np.abs(np.asarray(df.top_x_derivative(zero, th), dtype=float))
    k = profile.k
    scale = eps ** (-(2 * k + 2))
    leaf_lo, leaf_hi = leaf_factor(model, theta_points)
    pulled = df.form().restrict_to_z()
    power = wedge_power(pulled, model.n - 1)
    pv = evaluate_grid(power, zero, th)
    pmin = float(np.min(pv.max_abs())) if pv.coeffs else 0.0
    ms = [
        Measurement("max |top(omega_eps^n)| on Z", float(np.max(np.abs(top0))), FOLD_ZERO_TOL, "<="),
        Measurement("min |d/dx top| on Z", float(np.min(dtop)), TRANSVERSAL_FACTOR * scale, ">"),
        Measurement("max |d/dx top| on Z", float(np.max(dtop))),
        Measurement("2 eps^-(2k+2) n min|alpha_0^beta_0^(n-1)|", 2.0 * scale * model.n * min(abs(leaf_lo), abs(leaf_hi))),
        Measurement("min |(i*omega_eps)^(n-1)| on Z", pmin, 0.0, ">"),
    ]
    return CheckReport(f"folded eps={eps:g} ({model.label})", tuple(ms), FOLD_ZERO_TOL)


@dataclass(frozen=True)
class FoldRoot:
    x: float
    transversal: bool
    dtop: float
    thetas: tuple[float, ...]


def _bisect(fn, a: float, b: float, fa: float, xtol: float = 1e-12) -> float:
    while b - a > xtol:
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def fold_locus(model: LaurentModel, profile: Profile, eps: float, x_scan,
               thetas=None, theta_sweep: int | None = None) -> list[FoldRoot]:
    """Zeros of top(omega_eps^n) along x, refined by bisection and classified.

    Neighbouring scan points farther apart than twice the median spacing are
    treated as a gap in the scan, so no root is bracketed across it.
    """
    if profile.parity != ODD:
        raise ParityMismatchError("fold loci are computed for odd-case desingularizations")
    df = DesingularizedForm(model, profile, eps)
    xs = np.asarray(x_scan, dtype=float)
    if theta_sweep:
        base = np.arange(theta_sweep) * (2 * np.pi / theta_sweep)
        import itertools
        angle_sets = list(itertools.product(base, repeat=model.nangles))
    else:
        angle_sets = [tuple(thetas) if thetas is not None else (0.0,) * model.nangles]
    steps = np.diff(xs)
    max_step = 2.0 * float(np.median(steps)) if steps.size else 0.0
    threshold = TRANSVERSAL_FACTOR * eps ** (-(2 * profile.k + 2))
    roots: list[FoldRoot] = []
    for ang in angle_sets:
        th = [np.float64(a) for a in ang]
        vals = np.asarray(df.top_split(xs, th), dtype=float)
        fn = lambda x: float(df.top_split(x, th))
        found = []
        for i in range(len(xs)):
            if vals[i] == 0.0:
                found.append(float(xs[i]))
            elif (i + 1 < len(xs) and vals[i + 1] != 0.0 and vals[i] * vals[i + 1] < 0
                  and steps[i] <= max_step):
                found.append(_bisect(fn, float(xs[i]), float(xs[i + 1]), float(vals[i])))
        for r in found:
            d = abs(float(df.top_x_derivative(r, th)))
            roots.append(FoldRoot(r, d > threshold, d, tuple(float(a) for a in ang)))
    return roots
