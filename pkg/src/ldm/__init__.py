"""Localized density matrices by l1-regularized split Bregman iteration.

Dense solvers for reference work and linear-scaling banded solvers built on
Chebyshev matrix functions, for zero and finite temperature.
"""

from .banded import BandedSymMatrix, band_multiply, power_method_extremes, truncate
from .bregman import SolveReport, SolverConfig, solve
from .chebyshev import cheb_eval_matrix, cheb_eval_scalar, cheb_fit
from .dense_reference import fermi_dirac_density_matrix, projector_density_matrix
from .energy import EnergyBreakdown, evaluate
from .errors import (
    ConfigurationError,
    ConstraintViolationError,
    DegenerateProblemError,
    DimensionError,
    LDMError,
    ParameterError,
)
from .hamiltonian import DomainSpec, PotentialSpec, build_hamiltonian
from .metrics import ComparisonRecord, check_thm1, check_thm2, compare, scaling_study

__version__ = "0.1.0"

__all__ = [
    "BandedSymMatrix",
    "ComparisonRecord",
    "ConfigurationError",
    "ConstraintViolationError",
    "DegenerateProblemError",
    "DimensionError",
    "DomainSpec",
    "EnergyBreakdown",
    "LDMError",
    "ParameterError",
    "PotentialSpec",
    "SolveReport",
    "SolverConfig",
    "band_multiply",
    "build_hamiltonian",
    "cheb_eval_matrix",
    "cheb_eval_scalar",
    "cheb_fit",
    "check_thm1",
    "check_thm2",
    "compare",
    "evaluate",
    "fermi_dirac_density_matrix",
    "power_method_extremes",
    "projector_density_matrix",
    "scaling_study",
    "solve",
    "truncate",
]
