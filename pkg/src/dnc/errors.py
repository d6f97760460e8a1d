"""Exception hierarchy.

The CLI maps these onto exit codes: ``DataError`` -> 2,
``DegenerateInputError`` -> 3, everything else derived from ``DNCError`` -> 1.
"""


class DNCError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(DNCError, ValueError):
    pass


class DegenerateInputError(DNCError, ArithmeticError):
    """Normalization or an update was asked to act on a zero-norm quantity."""


class ConfigError(DNCError, ValueError):
    pass


class LabelError(DNCError, ValueError):
    pass


class DataError(DNCError, ValueError):
    """Malformed dataset, checkpoint or missing sample."""


class ContractError(DNCError, RuntimeError):
    """A call-order contract was violated (e.g. backward on a stale tape)."""
