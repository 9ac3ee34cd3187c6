"""Exception hierarchy shared by every module.

The CLI maps :class:`ResourceError` to exit code 3 and every other
:class:`QGradError` subclass to exit code 2.
"""

from __future__ import annotations


class QGradError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QGradError, ValueError):
    """Invalid parameters (out-of-range sizes, violated premises)."""


class DomainError(QGradError, ValueError):
    """Input value outside the mathematical domain of an operation."""


class ValidationError(QGradError, ValueError):
    """Structural check failed (non-unitary matrix, bad projector, bad weights)."""


class NumericError(QGradError, ArithmeticError):
    """Non-finite value produced where a finite one is required."""


class RangeError(QGradError, OverflowError):
    """Result would overflow double precision outside log-space mode."""


class ResourceError(QGradError):
    """Simulation size guard exceeded."""


class StateCorruptionError(QGradError):
    """State vector norm drifted beyond tolerance."""


class CertificationError(QGradError):
    """A constructed operator failed its numerical certificate."""

    def __init__(self, message: str, deviation: float | None = None):
        super().__init__(message)
        self.deviation = deviation


class PremiseError(QGradError, ValueError):
    """Premise of a bound or theorem is violated by the inputs."""
