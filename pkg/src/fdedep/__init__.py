"""Retarded functional differential equations: a stepwise Picard solver,
checks for modes of convergence of function sequences, and continuous
dependence experiments on families of problems."""

__version__ = "0.1.0"

from .convergence import (
    FnSeq,
    Resolution,
    RhsSeq,
    Verdict,
    check_continuous_convergence,
    check_exhaustive,
    check_generalized_cont_convergence,
    check_limit_continuity,
    check_pointwise,
    check_uniform_on_compacta,
    check_weak_exhaustive,
    cross_check,
    uniform_bound_on_tube,
)
from .dependence import FamilySpec, build_family, estimate_rate, run_dependence
from .expr import parse, to_source
from .fourier import fourier_coeffs, partial_sum, run_fourier_application
from .grid import EtaFn, HistorySegment, SampledFn, Trajectory
from .rhs import ExprRhs, parse_rhs
from .solver import ProblemSpec, SolveResult, solve

__all__ = [
    "EtaFn",
    "ExprRhs",
    "FamilySpec",
    "FnSeq",
    "HistorySegment",
    "ProblemSpec",
    "Resolution",
    "RhsSeq",
    "SampledFn",
    "SolveResult",
    "Trajectory",
    "Verdict",
    "build_family",
    "check_continuous_convergence",
    "check_exhaustive",
    "check_generalized_cont_convergence",
    "check_limit_continuity",
    "check_pointwise",
    "check_uniform_on_compacta",
    "check_weak_exhaustive",
    "cross_check",
    "estimate_rate",
    "fourier_coeffs",
    "parse",
    "parse_rhs",
    "partial_sum",
    "run_dependence",
    "run_fourier_application",
    "solve",
    "to_source",
    "uniform_bound_on_tube",
]
