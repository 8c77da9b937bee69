"""Exception types shared across the package."""


class SgcellError(Exception):
    """Base class for all package errors."""


class DomainError(SgcellError, ValueError):
    """A parameter lies outside the regime where a formula is defined."""


class ValidationError(SgcellError, ValueError):
    """Inputs fail a structural or consistency check."""


class UnsupportedConfigurationError(SgcellError, NotImplementedError):
    """The requested configuration has no implemented evaluation path."""


class AccuracyError(SgcellError, ArithmeticError):
    """A numerical procedure did not reach its requested tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether to accept them.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf"), what=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.what = what
