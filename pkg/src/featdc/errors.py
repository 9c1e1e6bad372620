"""Exception hierarchy shared by the whole package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError (and its
subclasses) -> 3, NumericError -> 4.
"""


class FeatdcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FeatdcError):
    """Invalid run configuration, plan, or guard violation."""


class DataError(FeatdcError):
    """Problem with input data: bad file, shape mismatch, invalid labels."""


class ParseError(DataError):
    """Malformed text while reading a sparse dataset file.

    The message always carries the 1-based line number.
    """


class ValidationError(DataError):
    """Structurally readable input that violates a format rule
    (non-ascending indices, duplicate index, index out of range,
    non-finite value)."""


class NumericError(FeatdcError):
    """Numerical failure: Cholesky breakdown, non-convergence,
    residual contract violation."""
