"""Exception types shared across the package."""


class ClusterNullError(Exception):
    """Base class for all package errors."""


class DomainError(ClusterNullError, ValueError):
    """An argument lies outside the mathematical domain of the function."""


class RankDeficientError(ClusterNullError):
    """Interferer direction matrix is numerically rank deficient."""


class ZeroVectorError(ClusterNullError, ValueError):
    """A direction was requested for an (almost) zero vector."""


class InsufficientBudgetError(ClusterNullError, ValueError):
    """Feedback budget too small for the requested allocation."""


class BudgetExceededError(ClusterNullError, ValueError):
    """Requested codebook size above the explicit-codebook cap."""


class DegenerateRealizationError(ClusterNullError):
    """Sampled deployment fails the typical-cluster preconditions; resample."""


class QuadratureError(ClusterNullError):
    """A numerical integral missed its error target.

    Attributes carry the achieved estimate so callers can log diagnostics.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
