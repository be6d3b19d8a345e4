"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class FavarError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FavarError):
    """Invalid or inconsistent run configuration."""


class DataError(FavarError):
    """Malformed input data or violated data contract."""


class NumericalError(FavarError):
    """Numerical failure (singular system, stability cap exhausted, ...)."""
