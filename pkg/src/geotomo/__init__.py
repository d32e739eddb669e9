"""Numerical geometric tomography of axisymmetric origin-symmetric convex bodies."""

from .errors import ConvergenceError, DomainError, GeotomoError, PipelineError, PreconditionError

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "GeotomoError",
    "PipelineError",
    "PreconditionError",
]
