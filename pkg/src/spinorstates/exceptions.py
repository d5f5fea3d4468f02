"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """A requested construction would exceed a configured size cap."""


class DomainError(ValueError):
    """Parameters fall outside the validity domain of an approximation."""


class UnsupportedConfigurationError(ValueError):
    """The operation is not defined for the given (N, M, L) configuration."""
