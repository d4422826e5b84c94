import logging
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import NamedTuple

import networkx as nx

from games.exceptions import AlphabetMismatch, DimensionMismatch, MalformedLasso, MalformedStrategy, \
    NondeterministicLabeling, ValidationError
from games.game_enums import Ordering, Parity, Player

logger = logging.getLogger(__name__)

RewardVec = tuple[int, ...]
Vector = tuple[Fraction, ...]


# ----------------------------------------------------------------------------
# Letters

class Letter(NamedTuple):
    """A total sign assignment over an ordered tuple of declared signals."""
    signals: tuple[str, ...]
    positive: frozenset[str]

    def __str__(self):
        return '{' + ','.join(self.entries) + '}'

    @property
    def entries(self) -> tuple[str, ...]:
        return tuple(signal if signal in self.positive else f"-{signal}" for signal in self.signals)

    def holds(self, signal: str) -> bool:
        return signal in self.positive

    def project(self, signals: Sequence[str]) -> 'Letter':
        """Re-express the assignment over `signals`, which must all be assigned by this letter."""
        missing = set(signals).difference(self.signals)
        if missing:
            raise AlphabetMismatch(f"letter {self} does not assign {', '.join(sorted(missing))}")
        return Letter(tuple(signals), self.positive.intersection(signals))

    def join(self, other: 'Letter') -> 'Letter':
        """Concatenate two assignments over disjoint signal sets."""
        if set(self.signals).intersection(other.signals):
            raise AlphabetMismatch(f"letters {self} and {other} share signals")
        return Letter(self.signals + other.signals, self.positive | other.positive)


def make_letter(signals: Sequence[str], positive: Iterable[str] = ()) -> Letter:
    """Build the letter over `signals` in which exactly the `positive` signals hold."""
    positive = frozenset(positive)
    if not positive.issubset(signals):
        raise AlphabetMismatch(f"unknown signals {', '.join(sorted(positive.difference(signals)))}")
    if len(set(signals)) != len(signals):
        raise AlphabetMismatch(f"duplicate signal in {', '.join(signals)}")
    return Letter(tuple(signals), positive)


def all_letters(signals: Sequence[str]) -> list[Letter]:
    """Enumerate the alphabet over `signals`; positive polarity first, first signal most significant."""
    signals = tuple(signals)
    return [Letter(signals, frozenset(signal for signal, value in zip(signals, values) if value))
            for values in product((True, False), repeat=len(signals))]


# ----------------------------------------------------------------------------
# Lexicographic values

class LexValue:
    """Either bottom (the parity-losing payoff) or a vector of exact rationals.

    Values are totally ordered: bottom is below every vector and vectors compare lexicographically.
    Comparing two vectors of different dimension raises a DimensionMismatch.
    """
    __slots__ = ('vector',)

    def __init__(self, vector: Iterable[Fraction | int] | None = None):
        self.vector: Vector | None = None if vector is None else tuple(Fraction(component) for component in vector)

    @property
    def is_bottom(self) -> bool:
        return self.vector is None

    @property
    def dim(self) -> int | None:
        return None if self.vector is None else len(self.vector)

    def _order(self, other: 'LexValue') -> Ordering:
        if self.vector is None or other.vector is None:
            return Ordering((other.vector is None) - (self.vector is None))
        if len(self.vector) != len(other.vector):
            raise DimensionMismatch(f"cannot compare {self} with {other}")
        if self.vector == other.vector:
            return Ordering.EQUAL
        return Ordering.LESS if self.vector < other.vector else Ordering.GREATER

    def __eq__(self, other):
        if not isinstance(other, LexValue):
            return NotImplemented
        return self.vector == other.vector

    def __hash__(self):
        return hash(self.vector)

    def __lt__(self, other):
        return self._order(other) is Ordering.LESS

    def __le__(self, other):
        return self._order(other) is not Ordering.GREATER

    def __gt__(self, other):
        return self._order(other) is Ordering.GREATER

    def __ge__(self, other):
        return self._order(other) is not Ordering.LESS

    def __repr__(self):
        return f"LexValue({None if self.vector is None else list(map(str, self.vector))})"

    def __str__(self):
        return 'bot' if self.vector is None else format_vector(self.vector)


BOTTOM = LexValue(None)


def format_vector(vector: Iterable[Fraction | int]) -> str:
    return '(' + ','.join(str(Fraction(component)) for component in vector) + ')'


def lex_compare(a: LexValue, b: LexValue) -> Ordering:
    """Compare two values in the lexicographic order with bottom least."""
    return a._order(b)


def vector_sub(a: LexValue, b: LexValue) -> Vector | None:
    """Component-wise difference of two vector values; None if either side is bottom."""
    if a.is_bottom or b.is_bottom:
        return None
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot subtract {b} from {a}")
    return tuple(x - y for x, y in zip(a.vector, b.vector))


def vector_add(a: LexValue, delta: Sequence[Fraction]) -> LexValue:
    if a.is_bottom:
        return a
    if a.dim != len(delta):
        raise DimensionMismatch(f"cannot add {format_vector(delta)} to {a}")
    return LexValue(x + y for x, y in zip(a.vector, delta))


def is_on_grid(value: LexValue, n: int) -> bool:
    """Whether every component of a vector value has denominator at most `n`."""
    return value.vector is not None and all(component.denominator <= n for component in value.vector)


def mean_vector(rewards: Sequence[RewardVec]) -> Vector:
    """Component-wise average of a nonempty sequence of reward vectors."""
    if not rewards:
        raise MalformedLasso('cannot average an empty cycle')
    return tuple(Fraction(sum(column), len(rewards)) for column in zip(*rewards)) if rewards[0] else ()


# ----------------------------------------------------------------------------
# Game graphs

class Edge(NamedTuple):
    index: int
    source: int
    target: int
    reward: RewardVec
    label: Letter | None = None


class GameGraph:
    """A two-player game graph with owners, an initial state, labeled reward edges and optional priorities.

    States are the integers 0..n-1 and carry display `names`. Edge indices identify edges across
    restrictions and subgames; they are unique but need not be contiguous.
    """

    def __init__(self,
                 names: Sequence[str],
                 owners: Sequence[Player],
                 initial: int,
                 edges: Iterable[Edge],
                 priorities: Sequence[int] | None = None,
                 dim: int | None = None):
        self.names = tuple(names)
        self.owners = tuple(owners)
        self.initial = initial
        self.edges = tuple(edges)
        self.priorities = None if priorities is None else tuple(priorities)
        self.dim = dim if dim is not None else (len(self.edges[0].reward) if self.edges else 0)

        out_edges = [[] for _ in self.names]
        for edge in self.edges:
            if not (0 <= edge.source < len(self.names) and 0 <= edge.target < len(self.names)):
                raise ValidationError(f"edge {edge.index} leaves the state space")
            out_edges[edge.source].append(edge)
        self.out_edges = tuple(tuple(sorted(edges, key=lambda edge: edge.index)) for edges in out_edges)
        self._validate()

    def _validate(self) -> None:
        n = len(self.names)
        if n == 0:
            raise ValidationError('a game graph needs at least one state')
        if len(set(self.names)) != n:
            raise ValidationError('state names must be unique')
        if len(self.owners) != n or not all(isinstance(owner, Player) for owner in self.owners):
            raise ValidationError('every state needs exactly one owner')
        if not 0 <= self.initial < n:
            raise ValidationError(f"initial state {self.initial} is not a state")
        if len({edge.index for edge in self.edges}) != len(self.edges):
            raise ValidationError('edge indices must be unique')
        if self.priorities is not None and (len(self.priorities) != n or any(p < 0 for p in self.priorities)):
            raise ValidationError('priorities must assign a natural number to every state')

        for edge in self.edges:
            if len(edge.reward) != self.dim:
                raise DimensionMismatch(f"edge {self.names[edge.source]} -> {self.names[edge.target]} has "
                                        f"{len(edge.reward)} reward components, expected {self.dim}")
            if any(not isinstance(r, int) or r < 0 for r in edge.reward):
                raise ValidationError(f"rewards must be natural numbers, got {edge.reward}")

        for state, edges in enumerate(self.out_edges):
            if not edges:
                raise ValidationError(f"state {self.names[state]} has no outgoing edge")
            labels = [edge.label for edge in edges if edge.label is not None]
            if len(set(labels)) != len(labels):
                duplicate = next(label for label in labels if labels.count(label) > 1)
                raise NondeterministicLabeling(f"duplicate letter {duplicate} on state {self.names[state]}")

    def __eq__(self, other):
        if not isinstance(other, GameGraph):
            return NotImplemented
        return (self.names, self.owners, self.initial, self.edges, self.priorities, self.dim) == \
            (other.names, other.owners, other.initial, other.edges, other.priorities, other.dim)

    def __hash__(self):
        return hash((self.names, self.initial, self.edges))

    def __repr__(self):
        return f"GameGraph(states={self.num_states}, edges={len(self.edges)}, dim={self.dim})"

    @property
    def num_states(self) -> int:
        return len(self.names)

    @property
    def has_priorities(self) -> bool:
        return self.priorities is not None

    def priority(self, state: int) -> int:
        return 0 if self.priorities is None else self.priorities[state]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown state {name}") from None

    def edge(self, index: int) -> Edge:
        return self._edges_by_index[index]

    def states_of(self, player: Player) -> tuple[int, ...]:
        return tuple(state for state, owner in enumerate(self.owners) if owner is player)

    @cached_property
    def _edges_by_index(self) -> dict[int, Edge]:
        return {edge.index: edge for edge in self.edges}

    @cached_property
    def _first_edge_between(self) -> dict[tuple[int, int], Edge]:
        first = {}
        for edge in sorted(self.edges, key=lambda edge: edge.index):
            first.setdefault((edge.source, edge.target), edge)
        return first

    @cached_property
    def digraph(self) -> nx.DiGraph:
        """The underlying state graph, parallel edges collapsed."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.num_states))
        graph.add_edges_from((edge.source, edge.target) for edge in self.edges)
        return graph

    def reachable(self, source: int | None = None) -> set[int]:
        source = self.initial if source is None else source
        return nx.descendants(self.digraph, source) | {source}

    def edges_along(self, path: Sequence[int]) -> tuple[Edge, ...]:
        """Turn a state path into edges, taking the lowest-index edge between consecutive states."""
        return tuple(self._first_edge_between[pair] for pair in zip(path, path[1:]))

    def shortest_edges(self, source: int, target: int, within: Iterable[int] | None = None) -> tuple[Edge, ...]:
        graph = self.digraph if within is None else self.digraph.subgraph(within)
        return self.edges_along(nx.shortest_path(graph, source, target))

    # ------------------------------------------------------------------------
    # Derived graphs

    def _derive(self, **changes) -> 'GameGraph':
        fields = dict(names=self.names, owners=self.owners, initial=self.initial, edges=self.edges,
                      priorities=self.priorities, dim=self.dim)
        return GameGraph(**(fields | changes))

    def restrict(self, moves: Mapping[int, int]) -> 'GameGraph':
        """Keep only the chosen edge (by index) at every state in `moves`."""
        for state, index in moves.items():
            if index not in self._edges_by_index or self._edges_by_index[index].source != state:
                raise MalformedStrategy(f"edge {index} does not leave state {self.names[state]}")
        return self._derive(edges=[edge for edge in self.edges
                                   if edge.source not in moves or moves[edge.source] == edge.index])

    def subgame(self, states: Iterable[int]) -> tuple['GameGraph', tuple[int, ...]]:
        """Restrict to `states`, dropping edges that leave them; returns the subgame and its state mapping."""
        kept = tuple(sorted(set(states)))
        position = {state: i for i, state in enumerate(kept)}
        edges = [edge._replace(source=position[edge.source], target=position[edge.target])
                 for edge in self.edges if edge.source in position and edge.target in position]
        return GameGraph(names=[self.names[state] for state in kept],
                         owners=[self.owners[state] for state in kept],
                         initial=position.get(self.initial, 0),
                         edges=edges,
                         priorities=None if self.priorities is None else [self.priorities[s] for s in kept],
                         dim=self.dim), kept

    def without_priorities(self) -> 'GameGraph':
        return self._derive(priorities=None)

    def swap_players(self) -> 'GameGraph':
        return self._derive(owners=[owner.opponent for owner in self.owners])

    def dual(self) -> 'GameGraph':
        """Exchange owners and shift every priority by one, complementing the parity objective."""
        priorities = [self.priority(state) + 1 for state in range(self.num_states)]
        return self._derive(owners=[owner.opponent for owner in self.owners], priorities=priorities)


# ----------------------------------------------------------------------------
# Lassos and payoffs

class Lasso(NamedTuple):
    """An ultimately periodic play: a finite prefix followed by a cycle repeated forever."""
    prefix: tuple[Edge, ...]
    cycle: tuple[Edge, ...]

    @property
    def start(self) -> int:
        return (self.prefix or self.cycle)[0].source

    @property
    def cycle_states(self) -> tuple[int, ...]:
        return tuple(edge.source for edge in self.cycle)

    def validate(self) -> 'Lasso':
        if not self.cycle:
            raise MalformedLasso('a lasso needs a nonempty cycle')
        path = self.prefix + self.cycle
        for first, second in zip(path, path[1:]):
            if first.target != second.source:
                raise MalformedLasso(f"edge {first.index} does not connect to edge {second.index}")
        if self.cycle[-1].target != self.cycle[0].source:
            raise MalformedLasso('the cycle does not return to its start')
        return self


def lasso_mean(lasso: Lasso) -> Vector:
    """Component-wise average of the rewards on the cycle; the prefix does not matter."""
    return mean_vector([edge.reward for edge in lasso.validate().cycle])


def lasso_parity(graph: GameGraph, lasso: Lasso) -> Parity:
    if not graph.has_priorities:
        raise ValidationError('the graph has no priorities')
    return Parity(min(graph.priority(state) for state in lasso.validate().cycle_states) % 2)


def lasso_mpp_payoff(graph: GameGraph, lasso: Lasso) -> LexValue:
    if lasso_parity(graph, lasso) is Parity.ODD:
        return BOTTOM
    return LexValue(lasso_mean(lasso))


def lasso_payoff(graph: GameGraph, lasso: Lasso) -> LexValue:
    """Mean-payoff parity payoff if the graph has priorities, plain mean payoff otherwise."""
    return lasso_mpp_payoff(graph, lasso) if graph.has_priorities else LexValue(lasso_mean(lasso))


def play_lasso(graph: GameGraph, moves: Mapping[int, int], start: int) -> Lasso:
    """Follow the unique play from `start` when every state has a chosen edge."""
    visited = {}
    path = []
    state = start
    while state not in visited:
        visited[state] = len(path)
        edge = graph.edge(moves[state])
        path.append(edge)
        state = edge.target
    return Lasso(tuple(path[:visited[state]]), tuple(path[visited[state]:]))


# ----------------------------------------------------------------------------
# Strategies

class FiniteMemoryStrategy(NamedTuple):
    """A strategy with a memory machine.

    The memory starts at `initial_memory` in the initial game state. On arriving at game state t with
    memory m the memory becomes update[m][t]. At an owned state s with memory m the strategy plays the
    edge with index moves[m][s].
    """
    owner: Player
    size: int
    initial_memory: int
    update: tuple[tuple[int, ...], ...]
    moves: tuple[Mapping[int, int], ...]

    def validate(self, graph: GameGraph) -> 'FiniteMemoryStrategy':
        if not 0 <= self.initial_memory < self.size or len(self.update) != self.size or len(self.moves) != self.size:
            raise MalformedStrategy('memory tables do not match the memory size')
        for row in self.update:
            if len(row) != graph.num_states or any(not 0 <= m < self.size for m in row):
                raise MalformedStrategy('memory update must be total and stay within the memory')
        for choices in self.moves:
            for state in graph.states_of(self.owner):
                if state not in choices or graph.edge(choices[state]).source != state:
                    raise MalformedStrategy(f"no valid move at state {graph.names[state]}")
        return self

    def product(self, graph: GameGraph) -> 'StrategyProduct':
        """The game graph obtained by running the memory alongside the game and fixing the owner's moves."""
        self.validate(graph)
        names, owners, priorities, edges = [], [], [], []
        for state in range(graph.num_states):
            for memory in range(self.size):
                names.append(f"{graph.names[state]}@{memory}")
                owners.append(graph.owners[state])
                priorities.append(graph.priority(state))
                if graph.owners[state] is self.owner:
                    choices = (graph.edge(self.moves[memory][state]),)
                else:
                    choices = graph.out_edges[state]
                for edge in choices:
                    target = edge.target * self.size + self.update[memory][edge.target]
                    edges.append(Edge(len(edges), state * self.size + memory, target, edge.reward, edge.label))
        product_graph = GameGraph(names, owners, graph.initial * self.size + self.initial_memory, edges,
                                  priorities if graph.has_priorities else None, graph.dim)
        return StrategyProduct(product_graph, self.size)


class StrategyProduct(NamedTuple):
    graph: GameGraph
    size: int

    def state(self, state: int, memory: int) -> int:
        return state * self.size + memory


class MemorylessStrategy(NamedTuple):
    """A strategy mapping each owned state to the index of one of its outgoing edges."""
    owner: Player
    moves: Mapping[int, int]

    def validate(self, graph: GameGraph) -> 'MemorylessStrategy':
        for state in graph.states_of(self.owner):
            if state not in self.moves or graph.edge(self.moves[state]).source != state:
                raise MalformedStrategy(f"no valid move at state {graph.names[state]}")
        return self

    def as_finite_memory(self, graph: GameGraph) -> FiniteMemoryStrategy:
        return FiniteMemoryStrategy(self.owner, 1, 0, ((0,) * graph.num_states,), (dict(self.moves),))


def complete_moves(graph: GameGraph, player: Player, moves: Mapping[int, int]) -> dict[int, int]:
    """Extend partial `moves` to every state of `player`, using the lowest-index edge where undefined."""
    return {state: moves.get(state, graph.out_edges[state][0].index) for state in graph.states_of(player)}


def as_finite_memory(graph: GameGraph, strategy: MemorylessStrategy | FiniteMemoryStrategy) -> FiniteMemoryStrategy:
    if isinstance(strategy, MemorylessStrategy):
        return strategy.as_finite_memory(graph)
    return strategy
