"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class QlatganError(Exception):
    """Base class for package errors."""


class ConfigError(QlatganError):
    """Invalid configuration: bad flag value, inconsistent dimensions."""


class DataError(QlatganError):
    """Unreadable, corrupt or incompatible input data."""


class NumericError(QlatganError):
    """Numerical failure: non-finite results, failed decompositions."""
