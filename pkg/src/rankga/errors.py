"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class DomainError(ValueError):
    pass


class CapacityError(ValueError):
    """Raised when an exhaustive computation would exceed its configured cap."""


class UnsupportedScheme(ValueError):
    pass


class ConfigError(ValueError):
    pass
