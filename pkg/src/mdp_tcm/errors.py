"""Exception types shared across the package."""


class DataError(Exception):
    """Input data is missing, malformed or insufficient for the request."""


class NumericError(RuntimeError):
    """A numeric computation produced non-finite values."""
