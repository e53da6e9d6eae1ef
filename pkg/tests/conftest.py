import math
from itertools import permutations

import numpy as np
import pytest

from deblog.forms import Form, FormValue, TrigPoly
from deblog.model import LaurentModel
from deblog.profile import build_even_profile, build_odd_profile


def nonconstant_beta_model() -> LaurentModel:
    """m=2, n=2 model whose beta depends on x through beta_1 and a dx ^ gamma term.

    d(dx ^ gamma) = -dx ^ cos(theta_2) dtheta_2 ^ dtheta_3 cancels d(x beta_1), so beta is closed.
    """
    dim, nang = 4, 3
    a0 = Form.basis(dim, 1) + Form.basis(dim, 2, coeff=TrigPoly.cos(2, nang, 0.3))
    a1 = Form.basis(dim, 1, coeff=TrigPoly.constant(0.5, nang))
    b0 = Form.basis(dim, 2, 3)
    b1 = Form.basis(dim, 2, 3, coeff=TrigPoly.cos(2, nang))
    gamma = Form.basis(dim, 3, coeff=TrigPoly.sin(2, nang))
    return LaurentModel(2, 2, (a0, a1), (b0, b1), gamma, label="nonconstant beta")


@pytest.fixture(scope="session")
def even1():
    return build_even_profile(1)


@pytest.fixture(scope="session")
def even2():
    return build_even_profile(2)


@pytest.fixture(scope="session")
def odd0():
    return build_odd_profile(0)


@pytest.fixture(scope="session")
def odd1():
    return build_odd_profile(1)


# -- brute-force exterior algebra oracle on dense antisymmetric tensors --------


def _perm_sign(p) -> int:
    sign, seen = 1, list(p)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def to_tensor(v: FormValue) -> np.ndarray:
    t = np.zeros((v.dim,) * v.degree)
    for idx, c in v.coeffs.items():
        for p in permutations(range(v.degree)):
            t[tuple(idx[i] for i in p)] += _perm_sign(p) * float(c)
    return t


def tensor_wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a ^ b) = sum over shuffles, via full antisymmetrization of a (x) b."""
    p, q = a.ndim, b.ndim
    prod = np.multiply.outer(a, b)
    out = np.zeros_like(prod)
    for perm in permutations(range(p + q)):
        out += _perm_sign(perm) * np.transpose(prod, perm)
    return out / (math.factorial(p) * math.factorial(q))


def from_tensor(t: np.ndarray, dim: int) -> dict:
    deg = t.ndim
    out = {}
    from itertools import combinations
    for idx in combinations(range(dim), deg):
        c = t[idx] if deg else float(t)
        if abs(c) > 1e-14:
            out[idx] = float(c)
    return out
