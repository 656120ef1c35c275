"""Rank-one Friedrichs models ``h_mu(p) = h0(p) - mu v`` on the 3-torus.

Typical use::

    from friedrichs import standard_model, mu0, find_eigenvalue

    spec = standard_model()
    spec = spec.with_mu(mu0(spec))
    find_eigenvalue(spec, (1.0, 1.0, 1.0))
"""
from .dispersion import Dispersion, check_cnd, cubic_nn, eval_dispersion
from .errors import (
    AboveThreshold,
    ConfigError,
    DegenerateMinimum,
    FriedrichsError,
    InfiniteLambda,
    NonUniqueMinimum,
    StructureViolation,
    SymmetryViolation,
)
from .fredholm import DetValue, bs_eigenvalue, fredholm_det, lambda_fn, mu0
from .landscape import fit_umin_expansion, hessian_data, maximize_q, minimize_q, validated_radius
from .model import CallablePhi, ConstPhi, FourierPhi, ModelSpec, SinPhi, build_symbol, standard_model
from .oracle import discretize, lowest_eigenvalue
from .quadrature import GridSpec, LocalRule, integrate_smooth, integrate_threshold
from .spectrum import EigenResult, essential_spectrum, find_eigenvalue, monotonicity_scan
from .threshold import (
    classify_threshold,
    fit_threshold_expansion,
    threshold_inequality_report,
    verify_assumption_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "AboveThreshold", "CallablePhi", "ConfigError", "ConstPhi", "DegenerateMinimum", "DetValue",
    "Dispersion", "EigenResult", "FourierPhi", "FriedrichsError", "GridSpec", "InfiniteLambda",
    "LocalRule", "ModelSpec", "NonUniqueMinimum", "SinPhi", "StructureViolation", "SymmetryViolation",
    "bs_eigenvalue", "build_symbol", "check_cnd", "classify_threshold", "cubic_nn", "discretize",
    "essential_spectrum", "eval_dispersion", "find_eigenvalue", "fit_threshold_expansion",
    "fit_umin_expansion", "fredholm_det", "hessian_data", "integrate_smooth", "integrate_threshold",
    "lambda_fn", "lowest_eigenvalue", "maximize_q", "minimize_q", "monotonicity_scan", "mu0",
    "standard_model", "threshold_inequality_report", "validated_radius", "verify_assumption_lambda",
]
