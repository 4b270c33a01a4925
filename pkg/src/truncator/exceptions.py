"""Exception and warning types raised across the package."""


class TruncatorError(Exception):
    """Base class for all package errors."""


class DimensionError(TruncatorError, ValueError):
    """Operands live in groups of different dimension."""


class DomainError(TruncatorError, ValueError):
    """An argument is outside the domain of an operation."""


class CapacityError(TruncatorError):
    """A request exceeds a documented size cap."""


class TieError(TruncatorError):
    """Strict-mode compilation met a configuration with a zero truncation sign."""


class TieWarning(UserWarning):
    """A spin configuration hit ``f_i == 0`` and the ``sgn(0) = +1`` rule was applied."""
