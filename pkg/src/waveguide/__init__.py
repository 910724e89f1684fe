"""Bound modes of weakly heterogeneous Dirichlet waveguides.

A localized density excess in an infinite 2D strip traps a mode just below
the continuum threshold pi^2/b^2.  This package computes the gap through
fourth order in the density perturbation (moment integrals plus
excited-mode Green's-function couplings), solves a piecewise-constant model
exactly through its transcendental dispersion relation, and cross-validates
both against a finite-difference generalized eigensolver.
"""

from .core import (
    Density,
    DomainError,
    Geometry,
    NumericsError,
    QuadratureSpec,
    TruncationError,
    XProfile,
    YProfile,
    evaluate_density,
    integrate_1d,
)
from .greens import GreenConfig, g2_eval, mode_kernel, tail_bound, y_overlap
from .oracle import GridSpec, ground_energy, refine_estimate
from .perturbation import (
    EnergyBreakdown,
    LambdaTerms,
    Moments,
    bound_condition,
    compute_lambdas,
    compute_moments,
    e2,
    e3,
    e4,
    e4_zero_avg_crosscheck,
    total_gap,
)
from .solvable import (
    ExactSolution,
    SolvableParams,
    branch_params,
    dispersion_residual,
    series_e0,
    series_e0_zero_avg,
    solve_exact,
    to_density,
)

__all__ = [
    "Density",
    "DomainError",
    "EnergyBreakdown",
    "ExactSolution",
    "Geometry",
    "GreenConfig",
    "GridSpec",
    "LambdaTerms",
    "Moments",
    "NumericsError",
    "QuadratureSpec",
    "SolvableParams",
    "TruncationError",
    "XProfile",
    "YProfile",
    "bound_condition",
    "branch_params",
    "compute_lambdas",
    "compute_moments",
    "dispersion_residual",
    "e2",
    "e3",
    "e4",
    "e4_zero_avg_crosscheck",
    "evaluate_density",
    "g2_eval",
    "ground_energy",
    "integrate_1d",
    "mode_kernel",
    "refine_estimate",
    "series_e0",
    "series_e0_zero_avg",
    "solve_exact",
    "tail_bound",
    "to_density",
    "total_gap",
    "y_overlap",
]

__version__ = "0.1.0"
