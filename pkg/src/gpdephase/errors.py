"""Exception and warning types shared across the package."""


class GpDephaseError(Exception):
    """Base class for all package errors."""


class DomainError(GpDephaseError, ValueError):
    """An argument lies outside the validity domain of an operation."""


class ConvergenceError(GpDephaseError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimate`` and ``error`` carry the best value obtained before giving up.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DegeneracyError(GpDephaseError, ArithmeticError):
    """Eigenvalues of a reduced density matrix coincide."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(GpDephaseError, ValueError):
    """Invalid or inconsistent run configuration; ``field`` names the culprit."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class OutputError(GpDephaseError, OSError):
    """A table or script could not be written or read back."""


class PositivityWarning(UserWarning):
    """A density matrix left the positive semidefinite cone."""
