import pytest
from hypothesis import strategies as st

from cli.formats import parse_game, parse_mealy, parse_qa
from configs.utils import read_fixture
from games.core import Edge, GameGraph, Lasso, all_letters
from games.game_enums import Player
from synthesis.automata import QuantAutomaton, Word
from synthesis.mealy import MealyMachine


def load_qa(name: str) -> QuantAutomaton:
    return parse_qa(read_fixture(f"{name}.qa"))


def load_game(name: str) -> GameGraph:
    return parse_game(read_fixture(f"{name}.game"))


def load_mealy(name: str) -> MealyMachine:
    return parse_mealy(read_fixture(f"{name}.mealy"))


def one_player(edges: list[tuple[int, int, tuple[int, ...]]], n: int, priorities: list[int] | None = None,
               owner: Player = Player.PLAYER1) -> GameGraph:
    """A graph owned entirely by `owner` from (source, target, reward) triples."""
    return GameGraph([f"s{state}" for state in range(n)], [owner] * n, 0,
                     [Edge(i, source, target, reward) for i, (source, target, reward) in enumerate(edges)],
                     priorities)


@pytest.fixture
def fig5() -> GameGraph:
    return load_game('fig5')


@pytest.fixture
def fig6() -> GameGraph:
    return load_game('fig6')


# ----------------------------------------------------------------------------
# Hypothesis strategies

@st.composite
def random_games(draw, max_states: int = 4, max_dim: int = 2, max_reward: int = 3, max_out: int = 3,
                 parity: bool = False, max_priority: int = 3, owners=None) -> GameGraph:
    n = draw(st.integers(1, max_states))
    dim = draw(st.integers(1, max_dim))
    owned = [owners] * n if owners is not None else draw(st.lists(st.sampled_from(list(Player)),
                                                                  min_size=n, max_size=n))
    edges = []
    for source in range(n):
        for target in draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=max_out)):
            reward = tuple(draw(st.lists(st.integers(0, max_reward), min_size=dim, max_size=dim)))
            edges.append(Edge(len(edges), source, target, reward))
    priorities = draw(st.lists(st.integers(0, max_priority), min_size=n, max_size=n)) if parity else None
    return GameGraph([f"s{state}" for state in range(n)], owned, 0, edges, priorities, dim)


def random_one_player_graphs(max_states: int = 6, max_dim: int = 2, max_reward: int = 3):
    return random_games(max_states=max_states, max_dim=max_dim, max_reward=max_reward, owners=Player.PLAYER1)


@st.composite
def random_lassos(draw, max_dim: int = 3, max_reward: int = 5) -> Lasso:
    dim = draw(st.integers(1, max_dim))
    prefix_length, cycle_length = draw(st.integers(0, 4)), draw(st.integers(1, 5))
    rewards = [tuple(draw(st.lists(st.integers(0, max_reward), min_size=dim, max_size=dim)))
               for _ in range(prefix_length + cycle_length)]
    prefix = tuple(Edge(i, i, i + 1, rewards[i]) for i in range(prefix_length))
    cycle = tuple(Edge(prefix_length + j, prefix_length + j, prefix_length + (j + 1) % cycle_length,
                       rewards[prefix_length + j]) for j in range(cycle_length))
    return Lasso(prefix, cycle)


@st.composite
def random_words(draw, signals: tuple[str, ...], max_prefix: int = 3, max_cycle: int = 4) -> Word:
    letters = st.sampled_from(all_letters(signals))
    return Word(tuple(draw(st.lists(letters, max_size=max_prefix))),
                tuple(draw(st.lists(letters, min_size=1, max_size=max_cycle))))


@st.composite
def random_automata(draw, max_states: int = 3, max_dim: int = 1, max_reward: int = 2,
                    parity: bool = False, max_priority: int = 3) -> QuantAutomaton:
    """A complete automaton over input r and output g."""
    n = draw(st.integers(1, max_states))
    dim = draw(st.integers(1, max_dim))
    transitions = []
    for source in range(n):
        for letter in all_letters(('r', 'g')):
            reward = tuple(draw(st.lists(st.integers(0, max_reward), min_size=dim, max_size=dim)))
            transitions.append((source, draw(st.integers(0, n - 1)), letter, reward))
    priorities = draw(st.lists(st.integers(0, max_priority), min_size=n, max_size=n)) if parity else None
    return QuantAutomaton.from_transitions(('r',), ('g',), [f"q{state}" for state in range(n)], 0, transitions,
                                           priorities, dim)
