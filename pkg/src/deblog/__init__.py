"""Desingularization of b^m-symplectic structures on tubular models.

The modules build the pieces bottom-up: ``forms`` (exterior algebra on the
chart), ``model`` (Laurent-form structures), ``profile`` (the smooth
replacement functions f), ``desing`` (omega_eps and its checks), ``volume``,
``moment`` and the ``cli`` front end.
"""

from .desing import (
    DesingularizedForm,
    check_coincidence,
    check_folded,
    check_symplectic,
    convergence_report,
    desingularize,
    fold_locus,
    invert_to_bivector,
)
from .forms import ChartPoint, Form, FormValue, TrigPoly, evaluate, wedge, wedge_power
from .model import LaurentModel, darboux_model, modular_vector_field, raw_bm_form, validate_model
from .moment import MomentImage, moment_image_case1, moment_image_case2
from .profile import (
    build_even_profile,
    build_odd_profile,
    build_profile,
    eval_profile,
    eval_scaled,
    validate_profile,
)
from .report import CheckReport, Measurement
from .volume import (
    VolumeExpansion,
    fit_expansion,
    moment_integrals,
    predicted_expansion,
    volume_complement,
    volume_desingularized,
)

__all__ = [
    "ChartPoint", "CheckReport", "DesingularizedForm", "Form", "FormValue", "LaurentModel",
    "Measurement", "MomentImage", "TrigPoly", "VolumeExpansion", "build_even_profile",
    "build_odd_profile", "build_profile", "check_coincidence", "check_folded", "check_symplectic",
    "convergence_report", "darboux_model", "desingularize", "eval_profile", "eval_scaled",
    "evaluate", "fit_expansion", "fold_locus", "invert_to_bivector", "modular_vector_field",
    "moment_image_case1", "moment_image_case2", "moment_integrals", "predicted_expansion",
    "raw_bm_form", "validate_model", "validate_profile", "volume_complement",
    "volume_desingularized", "wedge", "wedge_power",
]

__version__ = "0.1.0"
