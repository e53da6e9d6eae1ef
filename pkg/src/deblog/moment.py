"""Moment images of circle actions before and after desingularization.

Two situations are modeled. When the circle acts along the symplectic
leaves of Z, the moment component is a function on Z and its image does not
see eps at all. When the circle is generated by the modular direction, the
desingularized profile f_eps itself is the moment component, so the image
of a tube |x| <= lambda is an interval that grows as eps shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParityMismatchError
from .forms import ScalarField
from .model import LaurentModel, z_grid
from .profile import EVEN, Profile, eval_scaled

CASE1 = "case1"
CASE2 = "case2"
FORMULA = "formula"
SCAN = "scan"


@dataclass(frozen=True)
class MomentImage:
    case_tag: str
    eps: float | None
    intervals: tuple[tuple[float, float], ...]
    provenance: str

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("moment image must contain at least one interval")
        for lo, hi in self.intervals:
            if not lo <= hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
            if self.eps is not None and not (np.isfinite(lo) and np.isfinite(hi)):
                raise ValueError("endpoints must be finite for eps > 0")

    @property
    def lower(self) -> float:
        return min(lo for lo, _ in self.intervals)

    @property
    def upper(self) -> float:
        return max(hi for _, hi in self.intervals)

    def csv_row(self) -> tuple:
        return (self.eps if self.eps is not None else float("nan"), self.lower, self.upper, self.case_tag)


def moment_image_case2(profile: Profile, eps: float, lambda_: float) -> MomentImage:
    """Image of f_eps over |x| <= lambda: [f_eps(-lambda), f_eps(lambda)] since f_eps' > 0."""
    if profile.parity != EVEN:
        raise ParityMismatchError("f_eps is a monotone moment component only in the even case")
    if not 0.0 < eps <= lambda_ <= 1.0:
        raise ValueError(f"need 0 < eps <= lambda <= 1, got eps={eps}, lambda={lambda_}")
    lo = float(eval_scaled(profile, eps, -lambda_))
    hi = float(eval_scaled(profile, eps, lambda_))
    return MomentImage(CASE2, float(eps), ((lo, hi),), FORMULA)


def moment_image_case1(model: LaurentModel, leaf_moment: ScalarField,
                       theta_points: int = 64) -> MomentImage:
    """Range of a leafwise moment component over a grid on Z."""
    th = z_grid(model, theta_points)
    shape = th[0].shape if th else ()
    vals = np.broadcast_to(np.asarray(leaf_moment(np.zeros(shape), th), dtype=float), shape)
    return MomentImage(CASE1, None, ((float(vals.min()), float(vals.max())),), SCAN)


def coincidence_values(profile: Profile, eps: float, lambda_: float, x) -> np.ndarray:
    """f_eps(x) - f_eps(lambda) for |x| >= lambda.

    Beyond the band f_eps differs from the eps-free tail only by a constant,
    so these differences do not depend on eps.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) < lambda_):
        raise ValueError("points must satisfy |x| >= lambda")
    if not 0.0 < eps * profile.support <= lambda_:
        raise ValueError("need support * eps <= lambda")
    ref = np.where(x >= 0, eval_scaled(profile, eps, lambda_), eval_scaled(profile, eps, -lambda_))
    return np.asarray(eval_scaled(profile, eps, x)) - ref
