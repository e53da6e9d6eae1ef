"""Pointwise exterior algebra on the chart (x, theta_1, ..., theta_{2n-1}).

Basis covectors are indexed 0 (``dx``) and 1..dim-1 (``dtheta_i``). A form
stores one coefficient per strictly increasing index tuple, so antisymmetry
is structural and never needs a symmetrization pass.

Coefficients of a :class:`Form` are :class:`ScalarField` objects. Two
concrete kinds exist: :class:`TrigPoly` (Laurent polynomial in x with
trigonometric-polynomial coefficients in the angles, closed under products
and exactly integrable over the torus) and :class:`FuncField` (an opaque
vectorized callable). Evaluating a form gives a :class:`FormValue`, whose
coefficients are floats or numpy arrays broadcast over a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ChartDomainError, DegreeError, UnsupportedError

Number = Union[int, float]
Index = tuple[int, ...]

TWO_PI = 2.0 * math.pi


def basis_name(i: int) -> str:
    return "dx" if i == 0 else f"dtheta{i}"


def _merge_sign(a: Index, b: Index) -> int:
    """Sign of the permutation sorting ``a + b``; 0 if an index repeats."""
    if set(a) & set(b):
        return 0
    inversions = sum(1 for i in a for j in b if i > j)
    return -1 if inversions % 2 else 1


# ---------------------------------------------------------------------------
# Chart points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartPoint:
    x: float
    thetas: tuple[float, ...]

    def __post_init__(self):
        if not -1.0 < self.x < 1.0:
            raise ChartDomainError(f"x={self.x} outside the chart (-1, 1)")
        reduced = tuple(float(t) % TWO_PI for t in self.thetas)
        object.__setattr__(self, "thetas", reduced)
        object.__setattr__(self, "x", float(self.x))

    @property
    def dim(self) -> int:
        return len(self.thetas) + 1

    def shifted(self, axis: int, h: float) -> "ChartPoint":
        if axis == 0:
            return ChartPoint(self.x + h, self.thetas)
        th = list(self.thetas)
        th[axis - 1] += h
        return ChartPoint(self.x, tuple(th))


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


class ScalarField:
    """Coefficient function of a form, evaluable on (x, thetas)."""

    nangles: int
    order: int

    def __call__(self, x, thetas: Sequence):  # pragma: no cover - abstract
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def _coerce(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other.nangles != self.nangles:
                raise ValueError("scalar fields live on different charts")
            return other
        return TrigPoly.constant(float(other), self.nangles)

    def __add__(self, other):
        other = self._coerce(other)
        if isinstance(self, TrigPoly) and isinstance(other, TrigPoly):
            return self._add(other)
        a, b = self, other
        return FuncField(lambda x, th: a(x, th) + b(x, th), self.nangles,
                         min(a.order, b.order))

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if isinstance(self, TrigPoly) and isinstance(other, TrigPoly):
            return self._mul(other)
        a, b = self, other
        return FuncField(lambda x, th: a(x, th) * b(x, th), self.nangles,
                         min(a.order, b.order))

    __rmul__ = __mul__

    def dx(self) -> "ScalarField":
        raise UnsupportedError(f"{type(self).__name__} has no exact x-derivative")

    def dtheta(self, i: int) -> "ScalarField":
        raise UnsupportedError(f"{type(self).__name__} has no exact angle derivative")


TermKey = tuple[int, tuple[int, ...], str]


def _canonical_key(xpow: int, freqs: tuple[int, ...], kind: str, coef: float):
    nz = next((f for f in freqs if f != 0), 0)
    if nz == 0 and kind == "s":
        return None, 0.0
    if nz < 0:
        freqs = tuple(-f for f in freqs)
        if kind == "s":
            coef = -coef
    return (xpow, freqs, kind), coef


class TrigPoly(ScalarField):
    """Finite sum of ``c * x**p * cos(k.theta)`` / ``c * x**p * sin(k.theta)``.

    Powers ``p`` may be negative, which is how the singular factor 1/x^m of a
    b^m-form is carried exactly.
    """

    order = 10**6

    def __init__(self, terms: Mapping[TermKey, float], nangles: int):
        self.nangles = int(nangles)
        clean: dict[TermKey, float] = {}
        for (p, freqs, kind), c in terms.items():
            freqs = tuple(int(f) for f in freqs)
            if len(freqs) != self.nangles:
                raise ValueError(f"frequency vector {freqs} needs {self.nangles} entries")
            key, c = _canonical_key(int(p), freqs, kind, float(c))
            if key is None or c == 0.0:
                continue
            clean[key] = clean.get(key, 0.0) + c
        self.terms = {k: v for k, v in sorted(clean.items()) if v != 0.0}

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float, nangles: int) -> "TrigPoly":
        return cls({(0, (0,) * nangles, "c"): c}, nangles)

    @classmethod
    def monomial(cls, c: float, nangles: int, xpow: int = 0,
                 freqs: Sequence[int] | None = None, kind: str = "c") -> "TrigPoly":
        freqs = tuple(freqs) if freqs is not None else (0,) * nangles
        return cls({(xpow, freqs, kind): c}, nangles)

    @classmethod
    def cos(cls, angle: int, nangles: int, c: float = 1.0, freq: int = 1) -> "TrigPoly":
        """``c*cos(freq*theta_angle)`` with 1-based angle index."""
        freqs = [0] * nangles
        freqs[angle - 1] = freq
        return cls.monomial(c, nangles, 0, freqs, "c")

    @classmethod
    def sin(cls, angle: int, nangles: int, c: float = 1.0, freq: int = 1) -> "TrigPoly":
        freqs = [0] * nangles
        freqs[angle - 1] = freq
        return cls.monomial(c, nangles, 0, freqs, "s")

    # algebra ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def _add(self, other: "TrigPoly") -> "TrigPoly":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return TrigPoly(terms, self.nangles)

    def _mul(self, other: "TrigPoly") -> "TrigPoly":
        out: dict[TermKey, float] = {}

        def put(p, freqs, kind, c):
            key, c = _canonical_key(p, freqs, kind, c)
            if key is not None:
                out[key] = out.get(key, 0.0) + c

        for (p1, k1, s1), c1 in self.terms.items():
            for (p2, k2, s2), c2 in other.terms.items():
                p = p1 + p2
                half = 0.5 * c1 * c2
                plus = tuple(a + b for a, b in zip(k1, k2))
                minus = tuple(a - b for a, b in zip(k1, k2))
                if s1 == "c" and s2 == "c":
                    put(p, minus, "c", half)
                    put(p, plus, "c", half)
                elif s1 == "s" and s2 == "s":
                    put(p, minus, "c", half)
                    put(p, plus, "c", -half)
                elif s1 == "s":
                    put(p, plus, "s", half)
                    put(p, minus, "s", half)
                else:
                    put(p, plus, "s", half)
                    put(p, minus, "s", -half)
        return TrigPoly(out, self.nangles)

    def dx(self) -> "TrigPoly":
        return TrigPoly({(p - 1, k, s): p * c for (p, k, s), c in self.terms.items() if p != 0},
                        self.nangles)

    def dtheta(self, i: int) -> "TrigPoly":
        out = {}
        for (p, k, s), c in self.terms.items():
            f = k[i - 1]
            if f == 0:
                continue
            out[(p, k, "s" if s == "c" else "c")] = -f * c if s == "c" else f * c
        return TrigPoly(out, self.nangles)

    def x_powers(self) -> set[int]:
        return {p for p, _, _ in self.terms}

    def is_x_independent(self) -> bool:
        return self.x_powers() <= {0}

    def torus_integral(self) -> dict[int, float]:
        """Exact integral over the angle torus, as ``{x power: coefficient}``."""
        vol = TWO_PI ** self.nangles
        out: dict[int, float] = {}
        for (p, k, s), c in self.terms.items():
            if s == "c" and not any(k):
                out[p] = out.get(p, 0.0) + c * vol
        return out

    def __call__(self, x, thetas: Sequence):
        x = np.asarray(x, dtype=float)
        th = [np.asarray(t, dtype=float) for t in thetas]
        if len(th) != self.nangles:
            raise ValueError(f"expected {self.nangles} angles, got {len(th)}")
        total = np.zeros(np.broadcast_shapes(x.shape, *(t.shape for t in th)))
        for (p, k, s), c in self.terms.items():
            phase = 0.0
            for f, t in zip(k, th):
                if f:
                    phase = phase + f * t
            trig = np.cos(phase) if s == "c" else np.sin(phase)
            xp = 1.0 if p == 0 else np.power(x, float(p))
            total = total + c * xp * trig
        return total if total.ndim else float(total)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (p, k, s), c in self.terms.items():
            t = f"{c:g}"
            if p:
                t += f"*x^{p}"
            if any(k):
                t += f"*{'cos' if s == 'c' else 'sin'}({','.join(map(str, k))})"
            parts.append(t)
        return " + ".join(parts)


class FuncField(ScalarField):
    """Opaque vectorized coefficient ``fn(x, thetas)``.

    ``order`` is the declared number of derivatives the function is smooth
    to; ``deriv_x`` optionally provides an exact x-derivative.
    """

    def __init__(self, fn: Callable, nangles: int, order: int = 0,
                 deriv_x: Callable | None = None):
        if order < 0:
            raise ValueError("declared derivative order must be >= 0")
        self.fn = fn
        self.nangles = int(nangles)
        self.order = int(order)
        self._deriv_x = deriv_x

    def __call__(self, x, thetas: Sequence):
        return self.fn(x, thetas)

    def dx(self) -> ScalarField:
        if self._deriv_x is None:
            return super().dx()
        return FuncField(self._deriv_x, self.nangles, max(self.order - 1, 0))


# ---------------------------------------------------------------------------
# Forms and their point values
# ---------------------------------------------------------------------------


class _Alternating:
    dim: int
    degree: int
    coeffs: Mapping[Index, object]

    def _check_indices(self):
        for idx in self.coeffs:
            if len(idx) != self.degree:
                raise DegreeError(f"index {idx} inconsistent with degree {self.degree}")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"index tuple {idx} is not strictly increasing")
            if idx and not (0 <= idx[0] and idx[-1] < self.dim):
                raise ValueError(f"index tuple {idx} outside dimension {self.dim}")
        if not 0 <= self.degree <= self.dim:
            raise DegreeError(f"degree {self.degree} outside 0..{self.dim}")

    def __getitem__(self, idx: Index):
        return self.coeffs.get(tuple(idx), 0.0)

    def describe(self) -> str:
        items = []
        for idx, c in self.coeffs.items():
            name = "^".join(basis_name(i) for i in idx) or "1"
            items.append(f"({c!r}) {name}")
        return " + ".join(items) or "0"


def _accumulate(out: dict, idx: Index, value):
    out[idx] = out[idx] + value if idx in out else value


@dataclass(frozen=True)
class Form(_Alternating):
    """Differential form with :class:`ScalarField` coefficients."""

    dim: int
    degree: int
    coeffs: Mapping[Index, ScalarField] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, c in self.coeffs.items():
            c = c if isinstance(c, ScalarField) else TrigPoly.constant(float(c), self.dim - 1)
            if not c.is_zero():
                clean[tuple(idx)] = c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        self._check_indices()

    @property
    def nangles(self) -> int:
        return self.dim - 1

    @classmethod
    def zero(cls, dim: int, degree: int) -> "Form":
        return cls(dim, degree, {})

    @classmethod
    def scalar(cls, dim: int, value) -> "Form":
        return cls(dim, 0, {(): value})

    @classmethod
    def basis(cls, dim: int, *indices: int, coeff=1.0) -> "Form":
        """Decomposable basis form ``coeff * e^{i1} ^ ... ^ e^{ip}``."""
        sign = 1
        idx = list(indices)
        if len(set(idx)) != len(idx):
            return cls.zero(dim, len(idx))
        for i in range(len(idx)):
            for j in range(len(idx) - 1 - i):
                if idx[j] > idx[j + 1]:
                    idx[j], idx[j + 1] = idx[j + 1], idx[j]
                    sign = -sign
        if not isinstance(coeff, ScalarField):
            coeff = TrigPoly.constant(float(coeff), dim - 1)
        return cls(dim, len(idx), {tuple(idx): coeff * sign})

    def __add__(self, other: "Form") -> "Form":
        if other.dim != self.dim or other.degree != self.degree:
            raise DegreeError("cannot add forms of different dimension or degree")
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            _accumulate(out, idx, c)
        return Form(self.dim, self.degree, out)

    def __neg__(self) -> "Form":
        return self.scale(-1.0)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, s) -> "Form":
        return Form(self.dim, self.degree, {i: c * s for i, c in self.coeffs.items()})

    __mul__ = scale
    __rmul__ = scale

    def is_zero(self) -> bool:
        return not self.coeffs

    def all_trig(self) -> bool:
        return all(isinstance(c, TrigPoly) for c in self.coeffs.values())

    def has_dx(self) -> bool:
        return any(idx and idx[0] == 0 for idx in self.coeffs)

    def restrict_to_z(self) -> "Form":
        """Pullback to {x = 0}: drop dx terms and set x = 0 in coefficients."""
        out = {}
        for idx, c in self.coeffs.items():
            if idx and idx[0] == 0:
                continue
            if isinstance(c, TrigPoly):
                c = TrigPoly({k: v for k, v in c.terms.items() if k[0] == 0}, c.nangles)
            else:
                fn = c
                c = FuncField(lambda x, th, fn=fn: fn(np.zeros_like(np.asarray(x, float)), th),
                              c.nangles, c.order)
            out[idx] = c
        return Form(self.dim, self.degree, out)


@dataclass(frozen=True)
class FormValue(_Alternating):
    """Form evaluated at a point (float coefficients) or on a grid (arrays)."""

    dim: int
    degree: int
    coeffs: Mapping[Index, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", dict(sorted((tuple(k), v) for k, v in self.coeffs.items())))
        self._check_indices()

    def __add__(self, other: "FormValue") -> "FormValue":
        if other.dim != self.dim or other.degree != self.degree:
            raise DegreeError("cannot add form values of different dimension or degree")
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            _accumulate(out, idx, c)
        return FormValue(self.dim, self.degree, out)

    def __sub__(self, other: "FormValue") -> "FormValue":
        return self + other.scale(-1.0)

    def scale(self, s) -> "FormValue":
        return FormValue(self.dim, self.degree, {i: c * s for i, c in self.coeffs.items()})

    def max_abs(self):
        """Coefficientwise max norm (elementwise over a grid)."""
        if not self.coeffs:
            return 0.0
        return np.max(np.abs(np.stack(np.broadcast_arrays(*self.coeffs.values()))), axis=0)

    def to_matrix(self) -> np.ndarray:
        """Antisymmetric coefficient matrix of a 2-form; grid axes come first."""
        if self.degree != 2:
            raise DegreeError("only 2-forms have a coefficient matrix")
        vals = list(self.coeffs.values())
        shape = np.broadcast_shapes(*(np.shape(v) for v in vals)) if vals else ()
        mat = np.zeros(shape + (self.dim, self.dim))
        for (i, j), c in self.coeffs.items():
            mat[..., i, j] = c
            mat[..., j, i] = -np.asarray(c)
        return mat

    @classmethod
    def from_matrix(cls, mat: np.ndarray, tol: float = 0.0) -> "FormValue":
        mat = np.asarray(mat, dtype=float)
        dim = mat.shape[-1]
        coeffs = {}
        for i in range(dim):
            for j in range(i + 1, dim):
                c = mat[..., i, j]
                if np.any(np.abs(c) > tol):
                    coeffs[(i, j)] = c if c.ndim else float(c)
        return cls(dim, 2, coeffs)


def _wedge_coeffs(a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            s = _merge_sign(ia, ib)
            if s == 0:
                continue
            _accumulate(out, tuple(sorted(ia + ib)), ca * cb if s > 0 else -(ca * cb))
    return out


def wedge(a, b):
    """Exterior product of two forms or two form values."""
    if type(a) is not type(b):
        raise TypeError("wedge needs two Forms or two FormValues")
    if a.dim != b.dim:
        raise ValueError("forms live on charts of different dimension")
    deg = a.degree + b.degree
    if deg > a.dim:
        raise DegreeError(f"wedge degree {deg} exceeds dimension {a.dim}")
    return type(a)(a.dim, deg, _wedge_coeffs(a.coeffs, b.coeffs))


def _unit(a):
    if isinstance(a, Form):
        return Form.scalar(a.dim, TrigPoly.constant(1.0, a.dim - 1))
    return FormValue(a.dim, 0, {(): 1.0})


def wedge_power(a, p: int):
    """``a ^ a ^ ... ^ a`` (p factors); p = 0 gives the constant 1."""
    if p < 0:
        raise ValueError("power must be nonnegative")
    if p * a.degree > a.dim:
        raise DegreeError(f"power {p} of a degree-{a.degree} form exceeds dimension {a.dim}")
    out = _unit(a)
    for _ in range(p):
        out = wedge(out, a)
    return out


def evaluate(a: Form, p: ChartPoint) -> FormValue:
    if p.dim != a.dim:
        raise ChartDomainError(f"point of dimension {p.dim} for a form on dimension {a.dim}")
    return evaluate_grid(a, p.x, p.thetas)


def evaluate_grid(a: Form, x, thetas: Sequence) -> FormValue:
    """Vectorized evaluation; ``x`` and ``thetas`` broadcast against each other."""
    if np.any(np.abs(np.asarray(x)) >= 1.0):
        raise ChartDomainError("evaluation outside the chart |x| < 1")
    return FormValue(a.dim, a.degree, {i: c(x, thetas) for i, c in a.coeffs.items()})


def top_coefficient(v: FormValue):
    if v.degree != v.dim:
        raise DegreeError(f"top coefficient needs degree {v.dim}, got {v.degree}")
    return v.coeffs.get(tuple(range(v.dim)), 0.0)


@dataclass(frozen=True)
class VectorValue:
    """Tangent vector at a point, components over (d/dx, d/dtheta_1, ...)."""

    components: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(float(c) for c in self.components))

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def basis(cls, dim: int, i: int, scale: float = 1.0) -> "VectorValue":
        comps = [0.0] * dim
        comps[i] = scale
        return cls(tuple(comps))

    def as_array(self) -> np.ndarray:
        return np.array(self.components)


def contract(v: VectorValue, a: FormValue) -> FormValue:
    """Interior product, contracting into the first slot."""
    if a.degree < 1:
        raise DegreeError("cannot contract a vector into a 0-form")
    if v.dim != a.dim:
        raise ValueError("vector and form live on charts of different dimension")
    out: dict = {}
    for idx, c in a.coeffs.items():
        for s, i in enumerate(idx):
            vi = v.components[i]
            if vi == 0.0:
                continue
            rest = idx[:s] + idx[s + 1:]
            _accumulate(out, rest, c * vi if s % 2 == 0 else -(c * vi))
    return FormValue(a.dim, a.degree - 1, out)


def exterior_derivative_grid(a: Form, x, thetas: Sequence, h: float = 1e-4) -> FormValue:
    """Central-difference approximation of ``d a`` on a broadcast grid."""
    if a.degree >= a.dim:
        raise DegreeError("exterior derivative of a top-degree form is identically zero")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) + h >= 1.0):
        raise ChartDomainError(f"finite-difference stencil of half-width {h} leaves the chart")
    thetas = [np.asarray(t, dtype=float) for t in thetas]
    out: dict = {}
    for idx, c in a.coeffs.items():
        for j in range(a.dim):
            if j in idx:
                continue
            if j == 0:
                deriv = (c(x + h, thetas) - c(x - h, thetas)) / (2.0 * h)
            else:
                up = list(thetas)
                dn = list(thetas)
                up[j - 1] = thetas[j - 1] + h
                dn[j - 1] = thetas[j - 1] - h
                deriv = (c(x, up) - c(x, dn)) / (2.0 * h)
            s = _merge_sign((j,), idx)
            _accumulate(out, tuple(sorted((j,) + idx)), s * deriv)
    return FormValue(a.dim, a.degree + 1, out)


def exterior_derivative_value(a: Form, p: ChartPoint, h: float = 1e-4) -> FormValue:
    """Central-difference approximation of ``d a`` at ``p``."""
    return exterior_derivative_grid(a, p.x, p.thetas, h)


def exterior_derivative_residual(a: Form, p: ChartPoint, h: float = 1e-4) -> float:
    """Max-norm of the finite-difference exterior derivative of ``a`` at ``p``.

    Second-order accurate: O(h**2) for closed forms with smooth coefficients.
    """
    if a.degree == a.dim:
        return 0.0
    return float(exterior_derivative_value(a, p, h).max_abs())


def theta_grid(nangles: int, points: int) -> list[np.ndarray]:
    """Open uniform grid on the angle torus as broadcastable arrays."""
    base = np.arange(points) * (TWO_PI / points)
    axes = []
    for i in range(nangles):
        shape = [1] * nangles
        shape[i] = points
        axes.append(base.reshape(shape))
    return axes


def dense_thetas(nangles: int, points: int) -> list[np.ndarray]:
    """Same grid as :func:`theta_grid`, materialized to full shape."""
    return [np.broadcast_to(t, (points,) * nangles) for t in theta_grid(nangles, points)] \
        if nangles else []


def iter_points(x_values: Iterable[float], nangles: int, points: int):
    """Iterate ChartPoints over an x-list times an angle grid."""
    base = np.arange(points) * (TWO_PI / points)
    for x in x_values:
        for th in product(base, repeat=nangles):
            yield ChartPoint(float(x), tuple(th))
