"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


class DimensionError(ValueError):
    """Vector length does not match the problem dimension."""


class CapacityError(ValueError):
    """Exhaustive operation refused because the dimension is too large."""


class DomainError(ValueError):
    """Numeric argument outside the mathematical domain of the operation."""
