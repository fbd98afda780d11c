"""Boosted simulators for finite-domain label kernels.

A multiplicative-weights loop builds a predictor that a given family of
bounded tests cannot tell apart from a target kernel and that is calibrated
against rounded entropy subgradients. The remaining modules check the
resulting entropy and divergence inequalities numerically.
"""
from .characterization import (
    HypothesisClass,
    NotionSet,
    build_universal_simulator,
    omnipredictor_check,
    verify_converse,
    verify_forward,
    verify_transformed,
)
from .entropy import (
    EntropyNotion,
    WeightFunction,
    bregman,
    builtin_notions,
    collision,
    divergence,
    entropy_H,
    gap_identity_residual,
    min_entropy,
    notion_by_name,
    shannon,
    sigma_transform,
    sqrt_collision,
    subgradient_weight,
)
from .errors import ContractViolation, DomainError, NumericError, ShapeError
from .regularity import (
    DistinguisherFamily,
    RegularityInstance,
    RegularityResult,
    WeightFamily,
    complexity_of,
    find_violation_F,
    find_violation_R,
    run_regularity,
)
from .simplex import approx_softmax, inner_product, logsumexp, softmax

__version__ = "0.1.0"
