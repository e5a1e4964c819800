"""Exception taxonomy shared across the package.

Callers can catch :class:`GrownetError` to handle anything raised here;
the subclasses distinguish caller mistakes from bad data and numerical
blow-ups so the CLI can map them to exit codes.
"""


class GrownetError(Exception):
    """Base class for all errors raised by grownet."""


class ConfigError(GrownetError):
    """Invalid configuration: mismatched shapes, bad hyperparameters, unknown names."""


class UsageError(GrownetError):
    """API misuse: stale caches, calls out of order, empty inputs where data is required."""


class DataError(GrownetError):
    """Dataset contents violate the expected schema (labels, counts, ranges)."""


class ParseError(DataError):
    """A file could not be parsed; message names the file and offending location."""


class NumericalError(GrownetError):
    """A non-finite value appeared where finite math was required."""
