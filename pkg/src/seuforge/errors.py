"""Exception types shared across the package.

Everything raised on purpose derives from SeuForgeError so callers (and the
CLI) can separate expected failures from genuine bugs.
"""

from __future__ import annotations


class SeuForgeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SeuForgeError, ValueError):
    """An input is outside the validity window of a model."""


class ValidationError(SeuForgeError, ValueError):
    """A constructed object or argument set is internally inconsistent."""


class ConfigError(SeuForgeError, ValueError):
    """A run configuration failed parsing or constraint checks."""


class SolverError(SeuForgeError, RuntimeError):
    """A numerical solve did not converge; carries diagnostic state."""

    def __init__(self, message: str, *, residual: float | None = None,
                 iterations: int | None = None) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CalibrationError(SeuForgeError, RuntimeError):
    """Collection-efficiency calibration could not reach its targets."""
