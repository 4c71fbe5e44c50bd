"""Exact small-scale second-quantization oracle for the cubic correlation state.

Builds ``xi = exp(A) Omega`` on a finite set of tagged momentum modes and
compares brute-force operator expectations with their Wick-contraction
expansions.
"""
from .modes import ModeSet, generic_mode_set, degenerate_mode_set, single_pair_mode_set
from .space import FockVector, vacuum
from .operators import (
    OPERATOR_NAMES, OperatorSpec, apply_A, expectation, expectation_by_order, operator,
    theta, theta_op_apply, theta_sequence, xi,
)
from .series import FAMILY_PIECES, contraction_series, norm_series, verify

__all__ = [
    "ModeSet", "generic_mode_set", "degenerate_mode_set", "single_pair_mode_set",
    "FockVector", "vacuum", "OPERATOR_NAMES", "OperatorSpec", "apply_A", "expectation",
    "expectation_by_order", "operator", "theta", "theta_op_apply", "theta_sequence", "xi",
    "FAMILY_PIECES", "contraction_series", "norm_series", "verify",
]
