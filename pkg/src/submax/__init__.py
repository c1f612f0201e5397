"""Monotone submodular maximization over partition matroids.

Objectives of the form f(x) = offset + sum_j w_j h_j(g_j(x)) — analytic
kernels h_j composed with sparse multilinear inner functions g_j — are
maximized by continuous greedy on the multilinear relaxation, with
gradients from either a deterministic Taylor-expanded polynomial surrogate
or Monte-Carlo sampling, then rounded to a feasible set by pipage or swap
rounding.
"""

from .analytic import (
    AnalyticKernel,
    TaylorPolynomial,
    eval_kernel,
    eval_taylor,
    kernel_from_json,
    kernel_to_json,
    residual_bound,
    taylor,
)
from .errors import DomainError, InputError, OracleGuardError
from .matroid import PartitionMatroid, matroid_from_json, matroid_to_json
from .objective import (
    CompositeObjective,
    ExactEstimator,
    GradientEstimate,
    ObjectiveTerm,
    PolyEstimator,
    SampleConfig,
    SampleEstimator,
    bias_bound,
    bias_bound_for,
    build_poly_estimator,
    coordinate_bias_bound,
    grad_exact,
    grad_poly,
    grad_sample,
    lipschitz_p,
    objective_from_json,
    objective_to_json,
    relaxation_exact,
    surrogate_gap_bound,
    theoretical_sample_count,
    value_sample,
)
from .optimizer import (
    CertificateReport,
    GreedyConfig,
    GreedyResult,
    GreedyTrace,
    TraceRow,
    approximation_certificate,
    continuous_greedy,
)
from .polynomial import (
    MultilinearPoly,
    exact_coefficients,
    poly_from_text,
    poly_to_text,
    relaxation_by_enumeration,
)
from .rounding import (
    PipageCertificate,
    pad_to_base,
    pipage_certificate,
    pipage_round,
    swap_round,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticKernel",
    "TaylorPolynomial",
    "eval_kernel",
    "eval_taylor",
    "kernel_from_json",
    "kernel_to_json",
    "residual_bound",
    "taylor",
    "DomainError",
    "InputError",
    "OracleGuardError",
    "PartitionMatroid",
    "matroid_from_json",
    "matroid_to_json",
    "CompositeObjective",
    "ExactEstimator",
    "GradientEstimate",
    "ObjectiveTerm",
    "PolyEstimator",
    "SampleConfig",
    "SampleEstimator",
    "bias_bound",
    "bias_bound_for",
    "build_poly_estimator",
    "coordinate_bias_bound",
    "grad_exact",
    "grad_poly",
    "grad_sample",
    "lipschitz_p",
    "objective_from_json",
    "objective_to_json",
    "relaxation_exact",
    "surrogate_gap_bound",
    "theoretical_sample_count",
    "value_sample",
    "CertificateReport",
    "GreedyConfig",
    "GreedyResult",
    "GreedyTrace",
    "TraceRow",
    "approximation_certificate",
    "continuous_greedy",
    "MultilinearPoly",
    "exact_coefficients",
    "poly_from_text",
    "poly_to_text",
    "relaxation_by_enumeration",
    "PipageCertificate",
    "pad_to_base",
    "pipage_certificate",
    "pipage_round",
    "swap_round",
    "__version__",
]
