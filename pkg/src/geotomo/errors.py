"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class GeotomoError(Exception):
    """Base class for package errors."""


class DomainError(GeotomoError, ValueError):
    """An input lies outside the region where a formula is valid."""


class ConvergenceError(GeotomoError, RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` carries the best value obtained so far and ``evaluations``
    the number of integrand calls spent.
    """

    def __init__(self, message: str, estimate: float = float("nan"), evaluations: int = 0):
        super().__init__(message)
        self.estimate = estimate
        self.evaluations = evaluations


class PreconditionError(GeotomoError, ValueError):
    """A hypothesis required by a verification step does not hold."""


class PipelineError(GeotomoError, RuntimeError):
    """A multi-step construction could not be completed."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
