from enum import Enum
from typing import TypeVar

E = TypeVar('E', bound=Enum)


def flip_enum(value: E) -> E:
    """Return the other member of a two-member enum."""
    first, second = type(value)
    return second if value is first else first


class Player(str, Enum):
    """The owner of a game state. Player1 is the system, Player2 the environment."""
    PLAYER1 = 'p1'
    PLAYER2 = 'p2'

    @property
    def opponent(self) -> 'Player':
        return flip_enum(self)


class Parity(Enum):
    EVEN = 0
    ODD = 1


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class Mode(Enum):
    """Direction of an extreme mean-cycle search."""
    MIN = 'min'
    MAX = 'max'


class Verdict(str, Enum):
    """Describes the realizability of a specification at a cutoff."""
    REALIZABLE = 'realizable'
    LIMIT_ONLY = 'limit-only'
    UNREALIZABLE = 'unrealizable'
