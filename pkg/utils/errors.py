from typing import Optional


class HermlieError(Exception):
    """Base class for every error raised by hermlie. Carries the CLI exit code."""

    exit_code: int = 1


class ParseError(HermlieError, ValueError):
    """Malformed algebra, structure-tuple or matrix input."""

    exit_code = 2

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ValidityError(HermlieError, ValueError):
    """Input is well-formed but violates a structural requirement."""

    exit_code = 3


class PropertyError(HermlieError):
    """A verified property did not hold."""

    exit_code = 4


class NumericalError(HermlieError, RuntimeError):
    """Numerical failure: step underflow, drift, degeneration."""

    exit_code = 5
