"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto process exit codes, so raising the right class
matters: ConfigError/ShapeError -> 2, DataError -> 3, NumericError -> 4.
"""


class NsfError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(NsfError):
    """An array argument violates a documented shape or dtype contract."""


class ConfigError(NsfError):
    """A configuration value is missing, malformed, or out of range."""


class DataError(NsfError):
    """A file or dataset is missing, truncated, or fails validation."""


class NumericError(NsfError):
    """A computation produced non-finite values or diverged."""
