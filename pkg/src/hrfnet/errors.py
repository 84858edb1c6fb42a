"""Exception hierarchy shared by all subpackages.

Each class carries the process exit code the CLI maps it to.
"""


class HRFNetError(Exception):
    exit_code = 1


class ConfigError(HRFNetError, ValueError):
    """Invalid configuration or parameter value."""

    exit_code = 2


class ShapeError(ConfigError):
    """Tensor or image dimensions violate a module contract."""


class DataError(HRFNetError):
    """Missing, malformed or undersized input data."""

    exit_code = 3


class PlacementError(DataError):
    """A forgery region could not be placed inside the image."""


class NumericError(HRFNetError, ArithmeticError):
    """Non-finite values or an undefined metric."""

    exit_code = 4


class UndefinedAUCError(NumericError):
    """AUC requested for scores whose targets hold a single class."""
