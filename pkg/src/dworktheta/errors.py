"""Exception hierarchy shared by the algebra modules and the CLI."""

from typing import Any, Optional


class DworkThetaError(RuntimeError):
    """Base class for every error raised by dworktheta."""


class ContextError(DworkThetaError, ValueError):
    """Invalid parameters: (g, p, k) guards, spec syntax, unknown names."""


class DomainError(DworkThetaError, ValueError):
    """Mathematically invalid input for an operation."""


class ConvergenceError(DomainError):
    """Exponential argument below the convergence floor 1/(p-1)."""


class LemmaViolation(DworkThetaError):
    """An in-scope theorem-level assertion failed (never expected)."""


class PrecisionError(DworkThetaError):
    """Result cannot be certified at the working precision.

    This is the Unknown-precision signal; pipelines turn it into an
    ``unknown`` certificate for the stage it was raised in.
    """

    def __init__(self, message: str, *, stage: str = "", analysis: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.stage = stage
        self.analysis: dict[str, Any] = dict(analysis or {})


class WindowError(PrecisionError):
    """Reliable coefficient window is empty or too shallow."""
