"""Exception hierarchy for the toolkit.

Three families map onto the CLI exit codes: configuration problems (2),
data problems (3) and numerical failures (4).
"""

from __future__ import annotations


class FemdaError(Exception):
    """Base class of every error raised by this package."""


class ConfigError(FemdaError, ValueError):
    """Invalid experiment configuration or option value."""


class EmptyGrid(ConfigError):
    pass


class ParseError(FemdaError, ValueError):
    """Malformed text input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SumError(ParseError):
    """Scenario fractions that do not sum to one."""


class DataError(FemdaError):
    pass


class SchemaMismatch(DataError, ValueError):
    pass


class EmptyClass(DataError, ValueError):
    pass


class LengthMismatch(FemdaError, ValueError):
    pass


class NumericalError(FemdaError, ArithmeticError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class ZeroTrace(NumericalError):
    pass


class DegenerateClass(NumericalError):
    """Class data cannot support a non-singular scatter estimate."""
