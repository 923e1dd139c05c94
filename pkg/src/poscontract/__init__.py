"""Decide, construct and certify factorizations ``A = PQ`` into two positive
semidefinite contractions."""

from .canonical import CanonicalForm, SpectrumReport, analyze_spectrum, canonicalize
from .config import SolverConfig, ToleranceConfig
from .dilation import DilationData, build_dilation, cross_validate, is_projection_product
from .factors import (
    Decomposition,
    RejectionReport,
    TwoByTwoVerdict,
    certify,
    construct_factors,
    decide_2x2,
    decide_two_point_spectrum,
    decompose,
)
from .feasibility import (
    EigenBasis,
    FeasibilityProblem,
    SolveOutcome,
    SolveStatus,
    build_eigenbasis,
    build_problem,
    solve,
    lower_gamma,
    solve_balanced,
)

__version__ = "0.1.0"

__all__ = [
    "CanonicalForm",
    "Decomposition",
    "DilationData",
    "EigenBasis",
    "FeasibilityProblem",
    "RejectionReport",
    "SolveOutcome",
    "SolveStatus",
    "SolverConfig",
    "SpectrumReport",
    "ToleranceConfig",
    "TwoByTwoVerdict",
    "analyze_spectrum",
    "build_dilation",
    "build_eigenbasis",
    "build_problem",
    "canonicalize",
    "certify",
    "construct_factors",
    "cross_validate",
    "decide_2x2",
    "decide_two_point_spectrum",
    "decompose",
    "is_projection_product",
    "solve",
    "lower_gamma",
    "solve_balanced",
]
