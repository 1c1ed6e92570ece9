"""
Model specifications, builtin families and the coefficient hypothesis audit.
"""
from .families import FAMILIES, build_family, make_bounded_skew_heston, make_heston
from .hypotheses import HypothesisReport, Violation, validate_hypotheses
from .specs import ModelSpec, evaluate, sigma_sigma_star_eigenvalues, spec_hash

__all__ = [
    "FAMILIES",
    "HypothesisReport",
    "ModelSpec",
    "Violation",
    "build_family",
    "evaluate",
    "make_bounded_skew_heston",
    "make_heston",
    "sigma_sigma_star_eigenvalues",
    "spec_hash",
    "validate_hypotheses",
]
