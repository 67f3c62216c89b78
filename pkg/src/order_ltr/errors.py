"""Exceptions raised by order_ltr."""

from pathlib import Path


class OrderLTRError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(OrderLTRError, ValueError):
    """Array shapes of a model, a list or a permutation do not agree."""


class InvalidPermutationError(OrderLTRError, ValueError):
    """Positions are not a bijection onto {1, ..., n}."""


class ConfigError(OrderLTRError, ValueError):
    """A configuration file or flag combination is unusable."""


class DataError(OrderLTRError, ValueError):
    """An input record violates the file format."""

    def __init__(self, message: str, path: Path | str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class DivergenceError(OrderLTRError, ArithmeticError):
    """An optimizer produced a non-finite objective."""


class SingularSystemError(OrderLTRError, ArithmeticError):
    """Unregularized normal equations are rank deficient."""


class EvaluationError(OrderLTRError, ValueError):
    """Nothing could be evaluated."""
