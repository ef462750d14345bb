"""Exception hierarchy shared across the package."""


class MeterfillError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(MeterfillError):
    """Malformed CSV input (bad header, irregular spacing, bad values)."""


class ValidationError(MeterfillError):
    """A series or parameter object violates one of its invariants."""


class ImputationError(MeterfillError):
    """An imputation method cannot run on the given input."""


class InfeasibleSpecError(MeterfillError):
    """A missing-value insertion request cannot be satisfied."""


class MetricError(MeterfillError):
    """An error measure is undefined for the given inputs."""
