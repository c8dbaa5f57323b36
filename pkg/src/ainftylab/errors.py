"""Exception types shared across the package."""


class AinftylabError(Exception):
    """Base class for all package errors."""


class OutOfDomainError(AinftylabError):
    """A point or ball left the region where a sampled weight is defined."""


class ToleranceError(AinftylabError):
    """A quadrature or truncation error bound exceeded the requested tolerance.

    Carries the best available estimate so callers can decide to keep it.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class PositivityError(AinftylabError):
    """A quantity that must be strictly positive underflowed or vanished."""


class SolverError(AinftylabError):
    """The sparse linear solve failed or left a large residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(AinftylabError):
    """An iterative diagnostic (e.g. the pole-ladder ratios) failed to settle."""


class ConfigError(AinftylabError):
    """A run configuration failed validation; the message names the field."""

    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field
