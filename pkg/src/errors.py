"""Exception hierarchy for viscowave.

Operations raise these for precondition failures and numerical breakdowns.
Diagnostics that only report (CM checks, identity residuals) never raise.
"""

from __future__ import annotations


class ViscoWaveError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ViscoWaveError, ValueError):
    """Argument outside the domain of an operation (t <= 0, Re p <= 0, ...)."""


class ConstructionError(ViscoWaveError, ValueError):
    """Model or representation constructor called with invalid parameters."""


class ModelValidityError(ViscoWaveError, ValueError):
    """Model violates a structural requirement (negative density, non-integrable g)."""


class SolverError(ViscoWaveError):
    """Iterative or marching solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class HypothesisError(ViscoWaveError):
    """A theorem hypothesis failed its numerical check."""

    def __init__(self, message: str, failing_t: float | None = None):
        super().__init__(message)
        self.failing_t = failing_t


class UnsupportedOperation(ViscoWaveError):
    """Operation is not defined for this model (continuous wavefront, J0 = 0, ...)."""


class FitError(ViscoWaveError):
    """Least-squares fit could not be performed on the supplied window."""


class ConfigError(ViscoWaveError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        super().__init__(message)
        self.path = path
        self.line = line


class VerificationFailure(ViscoWaveError):
    """One or more verification checks failed."""
