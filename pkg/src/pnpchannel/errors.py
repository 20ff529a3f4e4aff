"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or malformed problem setup."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation (e.g. negative density)."""
