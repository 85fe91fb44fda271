"""Exception types shared across the package."""


class MontError(Exception):
    """Base class for all errors raised by this package."""


class DataError(MontError):
    """Raised for unreadable, malformed, or mismatching input data."""


class ConfigError(MontError):
    """Raised for invalid configuration values or plan files."""
