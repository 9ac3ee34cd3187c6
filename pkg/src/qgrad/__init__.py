"""Desk-scale simulation of quantum gradient estimation.

Modules: ``grid`` (fixed-point labels), ``stencil`` (central differences and
their bounds), ``statevec`` (dense state vectors and the grid Fourier
transform), ``oracles`` (phase/probability oracles, conversion, query
ledger), ``gradient`` (Jordan's algorithm and its stencil-based
pipelines), ``bounds`` (hybrid-method lower bounds), ``circuits``
(parametrized circuits and VQE objectives) and ``harness`` (baselines and
scaling experiments).
"""

from .errors import (CertificationError, ConfigurationError, DomainError, NumericError, PremiseError,
                     QGradError, RangeError, ResourceError, StateCorruptionError, ValidationError)
from .gradient import GradientJob, GradientReport, estimate_gradient_smooth
from .grid import GridSpec
from .oracles import PhaseOracle, ProbabilityOracle, QueryLedger, probability_to_phase
from .stencil import DifferenceScheme, central_coefficients

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "ConfigurationError", "DomainError", "NumericError", "PremiseError",
    "QGradError", "RangeError", "ResourceError", "StateCorruptionError", "ValidationError",
    "GradientJob", "GradientReport", "estimate_gradient_smooth", "GridSpec", "PhaseOracle",
    "ProbabilityOracle", "QueryLedger", "probability_to_phase", "DifferenceScheme",
    "central_coefficients",
]
