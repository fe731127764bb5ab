"""Multilevel Picard approximation for semilinear heat equations whose
nonlinearity acts on the gradient, and experiments showing its error on a
Euclidean-norm nonlinearity grows faster than any power of the dimension.
"""

from ._backend import BACKEND, compiled_available
from .bounds import BoundReport, bound_report
from .engine import (
    ErrorEstimate,
    EvalResult,
    MlpParams,
    NonFiniteError,
    error_l2,
    evaluate,
    node_count,
    second_moment_fV,
    time_kernel,
)
from .index_rng import MultiIndex, derive_stream
from .model import ProblemSpec, counterexample, exact_gradient, exact_value, pde_residual

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "compiled_available",
    "BoundReport",
    "bound_report",
    "ErrorEstimate",
    "EvalResult",
    "MlpParams",
    "NonFiniteError",
    "error_l2",
    "evaluate",
    "node_count",
    "second_moment_fV",
    "time_kernel",
    "MultiIndex",
    "derive_stream",
    "ProblemSpec",
    "counterexample",
    "exact_gradient",
    "exact_value",
    "pde_residual",
]
