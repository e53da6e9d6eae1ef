"""b^m-symplectic structures on the tube Z x (-1, 1), Z a torus, in Laurent form.

The structure is

    omega = dx/x^m ^ (alpha_0 + x alpha_1 + ... + x^(m-1) alpha_(m-1)) + beta,
    beta  = dx ^ gamma + beta_0 + x beta_1 + ... + x^(m-1) beta_(m-1) [+ remainder],

with alpha_i closed 1-forms and beta_j closed 2-forms pulled back from Z.
All forms live on the chart (x, theta_1, ..., theta_(2n-1)) of dimension 2n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, SingularEvaluationError
from .forms import (
    ChartPoint,
    Form,
    FormValue,
    TrigPoly,
    VectorValue,
    dense_thetas,
    evaluate,
    evaluate_grid,
    exterior_derivative_grid,
    wedge,
    wedge_power,
)
from .report import CheckReport, Measurement

CLOSED_TOL = 1e-6
NONDEGENERACY_TOL = 1e-9
MAX_GRID_POINTS = 2_000_000


def _x_power(dim: int, p: int) -> TrigPoly:
    return TrigPoly.monomial(1.0, dim - 1, xpow=p)


@dataclass(frozen=True)
class LaurentModel:
    m: int
    n: int
    alphas: tuple[Form, ...]
    betas: tuple[Form, ...]
    gamma: Form
    remainder: Form | None = None
    label: str = ""

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("need m >= 1 and n >= 1")
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "betas", tuple(self.betas))
        dim = self.dim
        if len(self.alphas) != self.m:
            raise ValueError(f"expected m={self.m} Laurent coefficients alpha_i, got {len(self.alphas)}")
        if len(self.betas) != self.m:
            raise ValueError(f"expected m={self.m} coefficients beta_j, got {len(self.betas)}")
        for name, forms, deg in (("alpha", self.alphas, 1), ("beta", self.betas, 2)):
            for i, a in enumerate(forms):
                if a.dim != dim or a.degree != deg:
                    raise ValueError(f"{name}_{i} must be a {deg}-form on a chart of dimension {dim}")
                if a.has_dx():
                    raise ValueError(f"{name}_{i} must be a form on Z (no dx component)")
                if not all(c.is_x_independent() for c in a.coeffs.values() if isinstance(c, TrigPoly)):
                    raise ValueError(f"{name}_{i} must not depend on x")
        if self.gamma.dim != dim or self.gamma.degree != 1 or self.gamma.has_dx():
            raise ValueError(f"gamma must be a 1-form without dx on dimension {dim}")
        if self.remainder is not None and (self.remainder.dim != dim or self.remainder.degree != 2):
            raise ValueError("remainder must be a 2-form on the chart")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def nangles(self) -> int:
        return 2 * self.n - 1

    def alpha_sum(self) -> Form:
        """sum_i x^i alpha_i."""
        out = Form.zero(self.dim, 1)
        for i, a in enumerate(self.alphas):
            out = out + a.scale(_x_power(self.dim, i))
        return out

    def beta_form(self) -> Form:
        """dx ^ gamma + sum_j x^j beta_j (+ remainder)."""
        out = wedge(Form.basis(self.dim, 0), self.gamma)
        for j, b in enumerate(self.betas):
            out = out + b.scale(_x_power(self.dim, j))
        if self.remainder is not None:
            out = out + self.remainder
        return out

    def singular_part(self) -> Form:
        """dx/x^m ^ sum_i x^i alpha_i."""
        return wedge(Form.basis(self.dim, 0, coeff=_x_power(self.dim, -self.m)), self.alpha_sum())

    def omega_form(self) -> Form:
        return self.singular_part() + self.beta_form()

    def is_polynomial(self) -> bool:
        forms = list(self.alphas) + list(self.betas) + [self.gamma]
        if self.remainder is not None:
            forms.append(self.remainder)
        return all(f.all_trig() for f in forms)

    def leaf_volume_form(self) -> Form:
        """alpha_0 ^ beta_0^(n-1), a top-degree form on Z."""
        return wedge(self.alphas[0], wedge_power(self.betas[0], self.n - 1))


def darboux_model(m: int, n: int) -> LaurentModel:
    """dx/x^m ^ dtheta_1 + dtheta_2 ^ dtheta_3 + ... + dtheta_(2n-2) ^ dtheta_(2n-1)."""
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    dim = 2 * n
    alphas = [Form.basis(dim, 1)] + [Form.zero(dim, 1)] * (m - 1)
    beta0 = Form.zero(dim, 2)
    for i in range(1, n):
        beta0 = beta0 + Form.basis(dim, 2 * i, 2 * i + 1)
    betas = [beta0] + [Form.zero(dim, 2)] * (m - 1)
    return LaurentModel(m, n, tuple(alphas), tuple(betas), Form.zero(dim, 1),
                        label=f"darboux(m={m}, n={n})")


def z_grid(model: LaurentModel, theta_points: int = 32) -> list[np.ndarray]:
    """Dense angle grid on Z, coarsened if the full grid would be too large."""
    pts = theta_points
    while pts > 2 and pts ** model.nangles > MAX_GRID_POINTS:
        pts //= 2
    return dense_thetas(model.nangles, pts)


def _closedness(form: Form, xs, thetas, h: float) -> float:
    if form.is_zero() or form.degree >= form.dim:
        return 0.0
    worst = 0.0
    for x in xs:
        d = exterior_derivative_grid(form, np.full(thetas[0].shape if thetas else (), x), thetas, h)
        worst = max(worst, float(np.max(d.max_abs())) if d.coeffs else 0.0)
    return worst


def validate_model(model: LaurentModel, theta_points: int = 32, h: float = 1e-4,
                   closed_tol: float = CLOSED_TOL,
                   nondeg_tol: float = NONDEGENERACY_TOL) -> CheckReport:
    """Closedness of the Laurent data and nondegeneracy of the cosymplectic pair on Z."""
    th = z_grid(model, theta_points)
    ms: list[Measurement] = []
    for i, a in enumerate(model.alphas):
        ms.append(Measurement(f"|d alpha_{i}|", _closedness(a, [0.0], th, h), closed_tol, "<="))
    for j, b in enumerate(model.betas):
        ms.append(Measurement(f"|d beta_{j}|", _closedness(b, [0.0], th, h), closed_tol, "<="))
    # gamma need not be closed on its own: d(dx ^ gamma) must cancel d(x^j beta_j)
    ms.append(Measurement("|d gamma|", _closedness(model.gamma, [0.0], th, h)))
    ms.append(Measurement("|d beta| (assembled, x in {-0.5, 0, 0.5})",
                          _closedness(model.beta_form(), [-0.5, 0.0, 0.5], th, h), closed_tol, "<="))

    zero = np.zeros(th[0].shape) if th else 0.0
    a0 = evaluate_grid(model.alphas[0], zero, th)
    a0_norm = a0.max_abs()
    ms.append(Measurement("min |alpha_0| on Z", float(np.min(a0_norm)), nondeg_tol, ">"))
    top = _z_top(evaluate_grid(model.leaf_volume_form(), zero, th))
    ms.append(Measurement("min |alpha_0 ^ beta_0^(n-1)| on Z", float(np.min(np.abs(top))), nondeg_tol, ">"))
    return CheckReport(f"model {model.label or ''}".strip(), tuple(ms), nondeg_tol)


def _z_top(v: FormValue):
    """Coefficient of dtheta_1 ^ ... ^ dtheta_(2n-1) of a top-degree form on Z."""
    return v.coeffs.get(tuple(range(1, v.dim)), 0.0)


def raw_bm_form(model: LaurentModel, p: ChartPoint) -> FormValue:
    """Value of the singular form omega at p (p.x != 0)."""
    if p.x == 0.0:
        raise SingularEvaluationError("omega has a pole of order m on Z = {x = 0}")
    return evaluate(model.omega_form(), p)


def cosymplectic_pair(model: LaurentModel) -> tuple[Form, Form]:
    """(alpha_0 restricted to Z, beta_0)."""
    return model.alphas[0].restrict_to_z(), model.betas[0]


def modular_vector_field(model: LaurentModel, z: ChartPoint, tol: float = 1e-10) -> VectorValue:
    """Unique v tangent to Z with i_v alpha_0 = 1 and i_v beta_0 = 0."""
    zpt = ChartPoint(0.0, z.thetas)
    a = evaluate(model.alphas[0], zpt)
    b = evaluate(model.betas[0], zpt)
    nz = model.nangles
    row = np.array([a[(i,)] for i in range(1, nz + 1)], dtype=float)
    B = b.to_matrix()[1:, 1:] if model.n > 1 else np.zeros((nz, nz))
    # (i_v beta)_j = sum_i v_i B[i, j]
    A = np.vstack([row[None, :], B.T])
    rhs = np.zeros(nz + 1)
    rhs[0] = 1.0
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise DegeneracyError(f"alpha_0 ^ beta_0^(n-1) vanishes at {z.thetas}; v is not unique")
    v, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = float(np.max(np.abs(A @ v - rhs)))
    if resid > tol:
        raise DegeneracyError(f"contraction equations inconsistent at {z.thetas} (residual {resid:.3g})")
    return VectorValue((0.0,) + tuple(v))


def omega_top_field(model: LaurentModel):
    """Top coefficient of omega^n as a scalar field (a Laurent TrigPoly for polynomial data)."""
    return wedge_power(model.omega_form(), model.n).coeffs.get(tuple(range(model.dim)))


def leaf_factor(model: LaurentModel, theta_points: int = 32) -> tuple[float, float]:
    """(min, max) over Z of the top coefficient of alpha_0 ^ beta_0^(n-1)."""
    th = z_grid(model, theta_points)
    zero = np.zeros(th[0].shape) if th else 0.0
    top = np.asarray(_z_top(evaluate_grid(model.leaf_volume_form(), zero, th)), dtype=float)
    return float(top.min()), float(top.max())
