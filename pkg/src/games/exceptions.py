import traceback
from typing import Any


class GameException(Exception):
    """An Exception to be raised if a game, automaton or machine cannot be processed."""
    exit_code = 1

    def to_json(self) -> dict[str, Any]:
        return dict(
            error=str(self),
            type=type(self).__name__,
            cause=type(self.__cause__).__name__ if self.__cause__ else None,
            message=str(self.__cause__) if self.__cause__ is not None else None,
            traceback=''.join(traceback.format_tb(self.__cause__.__traceback__)) if self.__cause__ is not None else None
        )


class UsageError(GameException):
    """Raised on malformed command lines."""


class ParseError(GameException):
    """Raised on malformed input text, pointing at the offending line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        super().__init__(message if line is None else f"line {line}, column {column or 1}: {message}")

    def to_json(self) -> dict[str, Any]:
        return super().to_json() | dict(line=self.line, column=self.column)


class ValidationError(GameException):
    """Raised if an object is well-formed syntactically but violates a structural invariant."""
    exit_code = 2


class DimensionMismatch(ValidationError):
    """Raised when reward vectors or values of different dimensions meet."""


class AlphabetMismatch(ValidationError):
    """Raised when letters, words, machines and automata disagree on their signals."""


class IncompleteAutomaton(ValidationError):
    """Raised if some state of an automaton lacks an edge for some letter."""


class NondeterministicLabeling(ValidationError):
    """Raised if two edges leaving the same state carry the same letter."""


class MalformedLasso(ValidationError):
    pass


class MalformedStrategy(ValidationError):
    pass


class NotSafety(ValidationError):
    pass


class EpsilonRequired(ValidationError):
    """Raised if only an epsilon-optimal implementation exists but no epsilon was supplied."""


class ResourceCapExceeded(GameException):
    """Raised if a configured cap (memory, enumeration size, steps, time) is reached before a result is certified."""
    exit_code = 3


class OracleCapExceeded(ResourceCapExceeded):
    pass


class UncertifiedValue(ResourceCapExceeded):
    """Raised if an operation needs an exact value that the certified-bounds engine could not certify."""


class DeadlineExceeded(ResourceCapExceeded):
    pass
