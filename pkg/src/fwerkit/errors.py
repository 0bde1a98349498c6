"""Exception types shared across the package."""


class FwerkitError(Exception):
    """Base class for all package errors."""


class DomainError(FwerkitError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigurationError(DomainError):
    """A model/truth/law combination is inconsistent (e.g. no true nulls)."""


class QuadratureError(FwerkitError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best achieved absolute error estimate in ``achieved_error``.
    """

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class NumericError(FwerkitError, ArithmeticError):
    """Root bracketing or iteration failed; ``bracket`` holds diagnostics."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
