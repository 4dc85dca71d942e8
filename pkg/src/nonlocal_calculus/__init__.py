"""Nonlocal divergence, gradient and curl with a power-law kernel.

Quadrature on the interaction ball, analytic test fields, grid stencils and
tools that measure the O(delta^2) nonlocal-to-local convergence.
"""

__version__ = "0.1.0"

from .kernel import Kernel, KernelSingularityError, kernel_eval, kernel_la_norm_exact, kernel_new
from .quadrature import BallQuadratureRule, build_rule, integrate_ball, la_norm_numeric, moment_check
from .grid import GridFunction, sample_to_grid
from .fields import AnalyticField, builtin_field, local_operator, sobolev_norm, sobolev_norms
from .operators import (
    NonlocalOperatorSpec,
    evaluate_points,
    nonlocal_curl_at,
    nonlocal_divergence_at,
    nonlocal_gradient_at,
    nonlocal_operator,
)
from .stencil import StencilOperator, apply_stencil, build_stencil
from .analysis import (
    ConvergenceReport,
    c0_constant,
    convergence_sweep,
    convergence_sweeps,
    lq_error,
    rate_fit,
)
from .maximal import MaximalReport, maximal_bound_check, maximal_function

__all__ = [
    "Kernel", "KernelSingularityError", "kernel_eval", "kernel_la_norm_exact", "kernel_new",
    "BallQuadratureRule", "build_rule", "integrate_ball", "la_norm_numeric", "moment_check",
    "GridFunction", "sample_to_grid",
    "AnalyticField", "builtin_field", "local_operator", "sobolev_norm", "sobolev_norms",
    "NonlocalOperatorSpec", "evaluate_points", "nonlocal_curl_at", "nonlocal_divergence_at",
    "nonlocal_gradient_at", "nonlocal_operator",
    "StencilOperator", "apply_stencil", "build_stencil",
    "ConvergenceReport", "c0_constant", "convergence_sweep", "convergence_sweeps", "lq_error",
    "rate_fit",
    "MaximalReport", "maximal_bound_check", "maximal_function",
]
