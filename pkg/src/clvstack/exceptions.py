"""Exception types raised by clvstack."""


class ClvStackError(ValueError):
    """Base class for input and domain errors raised by this package."""


class SchemaError(ClvStackError):
    """A CSV header is missing a required column."""


class EmptyInputError(ClvStackError):
    """An operation received no rows where at least one is required."""


class WindowError(ClvStackError):
    """A feature-window cutoff or horizon is invalid for the data."""


class ChurnZeroError(ZeroDivisionError):
    """Every customer repeated, so churn is 0 and the CLV ratio is undefined."""


class ModelFormatError(ClvStackError):
    """A serialized model document cannot be decoded."""
