import logging
from collections import deque
from collections.abc import Callable, Mapping, Sequence
from typing import NamedTuple

from games.core import Edge, GameGraph, Lasso, Letter, LexValue, RewardVec, all_letters, lasso_payoff, make_letter
from games.exceptions import AlphabetMismatch, DimensionMismatch, IncompleteAutomaton, MalformedLasso, NotSafety, \
    ValidationError
from games.game_enums import Player

logger = logging.getLogger(__name__)


class Word(NamedTuple):
    """An ultimately periodic word: the prefix, then the cycle repeated forever."""
    prefix: tuple[Letter, ...]
    cycle: tuple[Letter, ...]

    def __str__(self):
        return ' '.join([*map(str, self.prefix), '|', *map(str, self.cycle)])


class QuantAutomaton:
    """A complete deterministic automaton over inputs and outputs with reward vectors and optional priorities.

    The underlying graph has one Player1 state per automaton state and one labeled edge per state and letter.
    """

    def __init__(self, inputs: Sequence[str], outputs: Sequence[str], graph: GameGraph):
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.signals = self.inputs + self.outputs
        self.graph = graph
        if len(set(self.signals)) != len(self.signals):
            raise AlphabetMismatch(f"inputs and outputs must be distinct signals: {', '.join(self.signals)}")
        if any(owner is not Player.PLAYER1 for owner in graph.owners):
            raise ValidationError('automaton states must all belong to Player1')

        self._delta: dict[tuple[int, Letter], Edge] = {}
        for edge in graph.edges:
            if edge.label is None:
                raise ValidationError(f"edge {edge.index} of state {graph.names[edge.source]} has no letter")
            self._delta[edge.source, edge.label.project(self.signals)] = edge
        for state in range(graph.num_states):
            for letter in all_letters(self.signals):
                if (state, letter) not in self._delta:
                    raise IncompleteAutomaton(f"incomplete at state {graph.names[state]}: {letter}")

    @classmethod
    def from_transitions(cls,
                         inputs: Sequence[str],
                         outputs: Sequence[str],
                         names: Sequence[str],
                         initial: int,
                         transitions: Sequence[tuple[int, int, Letter, RewardVec]],
                         priorities: Sequence[int] | None = None,
                         dim: int | None = None) -> 'QuantAutomaton':
        """Build an automaton from (source, target, letter, reward) transitions."""
        edges = [Edge(i, source, target, tuple(reward), letter)
                 for i, (source, target, letter, reward) in enumerate(transitions)]
        graph = GameGraph(names, [Player.PLAYER1] * len(names), initial, edges, priorities, dim)
        return cls(inputs, outputs, graph)

    def __eq__(self, other):
        if not isinstance(other, QuantAutomaton):
            return NotImplemented
        return (self.inputs, self.outputs, self.graph) == (other.inputs, other.outputs, other.graph)

    def __hash__(self):
        return hash((self.inputs, self.outputs, self.graph))

    def __repr__(self):
        return f"QuantAutomaton(inputs={self.inputs}, outputs={self.outputs}, states={self.num_states})"

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.names

    @property
    def initial(self) -> int:
        return self.graph.initial

    @property
    def num_states(self) -> int:
        return self.graph.num_states

    @property
    def dim(self) -> int:
        return self.graph.dim

    @property
    def has_priorities(self) -> bool:
        return self.graph.has_priorities

    def priority(self, state: int) -> int:
        return self.graph.priority(state)

    def step(self, state: int, letter: Letter) -> Edge:
        """The edge taken from `state` on `letter`, which must assign every signal."""
        return self._delta[state, letter.project(self.signals)]

    def successor(self, state: int, letter: Letter) -> int:
        return self.step(state, letter).target


# ----------------------------------------------------------------------------
# Words

def run_word(automaton: QuantAutomaton, word: Word) -> Lasso:
    """The run of the automaton on a word, folded into a lasso once a (state, cycle position) repeats."""
    if not word.cycle:
        raise MalformedLasso('a word needs a nonempty cycle')
    prefix = []
    state = automaton.initial
    for letter in word.prefix:
        edge = automaton.step(state, letter)
        prefix.append(edge)
        state = edge.target

    seen: dict[tuple[int, int], int] = {}
    path = []
    position = 0
    while (state, position) not in seen:
        seen[state, position] = len(path)
        edge = automaton.step(state, word.cycle[position])
        path.append(edge)
        state = edge.target
        position = (position + 1) % len(word.cycle)
    start = seen[state, position]
    return Lasso(tuple(prefix + path[:start]), tuple(path[start:]))


def eval_word(automaton: QuantAutomaton, word: Word) -> LexValue:
    """Value of an ultimately periodic word: the cycle mean, or bottom if the run violates parity."""
    return lasso_payoff(automaton.graph, run_word(automaton, word))


def is_safety(automaton: QuantAutomaton) -> bool:
    """Whether all rewards are one-dimensional, 0 or 1, and no 1-edge is reachable after a 0-edge."""
    if automaton.dim != 1:
        return False
    graph = automaton.graph
    if any(edge.reward not in ((0,), (1,)) for edge in graph.edges):
        return False
    violating = set()
    for edge in graph.edges:
        if edge.reward == (0,) and edge.target not in violating:
            violating |= graph.reachable(edge.target)
    return not any(edge.source in violating for edge in graph.edges if edge.reward == (1,))


# ----------------------------------------------------------------------------
# Products

def _joint_alphabet(a: QuantAutomaton, b: QuantAutomaton) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Inputs and outputs of both factors, those of `a` first."""
    clash = (set(a.inputs) & set(b.outputs)) | (set(a.outputs) & set(b.inputs))
    if clash:
        raise AlphabetMismatch(f"signals used both as input and output: {', '.join(sorted(clash))}")
    inputs = a.inputs + tuple(signal for signal in b.inputs if signal not in a.inputs)
    outputs = a.outputs + tuple(signal for signal in b.outputs if signal not in a.outputs)
    return inputs, outputs


def synchronized_product(a: QuantAutomaton,
                         b: QuantAutomaton,
                         reward: Callable[[Edge, Edge], RewardVec],
                         priority: Callable[[int, int], int] | None,
                         dim: int) -> QuantAutomaton:
    """Reachable synchronized product over the signals of both factors; product states are named "a.b"."""
    inputs, outputs = _joint_alphabet(a, b)
    letters = all_letters(inputs + outputs)
    start = (a.initial, b.initial)
    index = {start: 0}
    queue = deque([start])
    transitions = []
    while queue:
        pair = queue.popleft()
        for letter in letters:
            left, right = a.step(pair[0], letter), b.step(pair[1], letter)
            successor = (left.target, right.target)
            if successor not in index:
                index[successor] = len(index)
                queue.append(successor)
            transitions.append((index[pair], index[successor], letter, reward(left, right)))

    pairs = sorted(index, key=index.get)
    names = [f"{a.names[p]}.{b.names[q]}" for p, q in pairs]
    priorities = None if priority is None else [priority(p, q) for p, q in pairs]
    return QuantAutomaton.from_transitions(inputs, outputs, names, 0, transitions, priorities, dim)


def _shared_priority(a: QuantAutomaton, b: QuantAutomaton) -> Callable[[int, int], int] | None:
    if a.has_priorities and b.has_priorities:
        raise ValidationError('at most one factor of a product may carry priorities')
    if a.has_priorities:
        return lambda p, q: a.priority(p)
    if b.has_priorities:
        return lambda p, q: b.priority(q)
    return None


def product_parity_lexmp(parity: QuantAutomaton, quant: QuantAutomaton) -> QuantAutomaton:
    """Equip a reward-free parity automaton with the rewards of a mean-payoff automaton."""
    if not parity.has_priorities or parity.dim != 0:
        raise ValidationError('the first factor must be a reward-free parity automaton')
    if quant.has_priorities:
        raise ValidationError('the second factor must not carry priorities')
    if set(parity.inputs) != set(quant.inputs) or set(parity.outputs) != set(quant.outputs):
        raise AlphabetMismatch(f"factors disagree on their signals: {', '.join(parity.signals)} against "
                               f"{', '.join(quant.signals)}")
    return synchronized_product(parity, quant, lambda left, right: right.reward,
                                lambda p, q: parity.priority(p), quant.dim)


def product_lex(a: QuantAutomaton, b: QuantAutomaton) -> QuantAutomaton:
    """Product whose reward vectors concatenate those of `a` and `b`, `a` taking precedence."""
    return synchronized_product(a, b, lambda left, right: left.reward + right.reward,
                                _shared_priority(a, b), a.dim + b.dim)


def product_sum(a: QuantAutomaton, b: QuantAutomaton) -> QuantAutomaton:
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot add rewards of dimensions {a.dim} and {b.dim}")
    return synchronized_product(a, b, lambda left, right: tuple(x + y for x, y in zip(left.reward, right.reward)),
                                _shared_priority(a, b), a.dim)


def compose_safety_pair(safety: QuantAutomaton, quant: QuantAutomaton) -> QuantAutomaton:
    """Combine a safety specification with a quantitative one.

    Safe edges get the quantitative reward shifted to stay positive, violating edges get 0, so
    every safe word is worth more than any unsafe one. The result is minimized.
    """
    if not is_safety(safety):
        raise NotSafety('the first automaton is not a safety automaton')
    if quant.has_priorities:
        raise ValidationError('the quantitative automaton must not carry priorities')
    floor = tuple(min(column) for column in zip(*(edge.reward for edge in quant.graph.edges))) \
        if quant.dim else ()

    def reward(left: Edge, right: Edge) -> RewardVec:
        if left.reward == (1,):
            return tuple(r - low + 1 for r, low in zip(right.reward, floor))
        return (0,) * quant.dim

    return minimize(synchronized_product(safety, quant, reward, _shared_priority(safety, quant), quant.dim))


def rename_signals(automaton: QuantAutomaton, mapping: Mapping[str, str]) -> QuantAutomaton:
    """Rename signals; unmapped signals keep their names."""
    inputs = tuple(mapping.get(signal, signal) for signal in automaton.inputs)
    outputs = tuple(mapping.get(signal, signal) for signal in automaton.outputs)
    signals = inputs + outputs
    edges = [edge._replace(label=make_letter(signals, (mapping.get(s, s) for s in edge.label.positive)))
             for edge in automaton.graph.edges]
    graph = automaton.graph
    return QuantAutomaton(inputs, outputs, GameGraph(graph.names, graph.owners, graph.initial, edges,
                                                     graph.priorities, graph.dim))


# ----------------------------------------------------------------------------
# Minimization and comparison

def _reachable_part(automaton: QuantAutomaton) -> list[int]:
    return sorted(automaton.graph.reachable())


def minimize(automaton: QuantAutomaton) -> QuantAutomaton:
    """Merge states with equal priorities whose future rewards coincide on every word."""
    letters = all_letters(automaton.signals)
    states = _reachable_part(automaton)
    blocks = {state: automaton.priority(state) if automaton.has_priorities else 0 for state in states}
    while True:
        signatures = {state: (blocks[state], tuple((automaton.step(state, letter).reward,
                                                    blocks[automaton.successor(state, letter)])
                                                   for letter in letters))
                      for state in states}
        numbering = {}
        for state in states:
            numbering.setdefault(signatures[state], len(numbering))
        refined = {state: numbering[signatures[state]] for state in states}
        if len(numbering) == len(set(blocks.values())):
            blocks = refined
            break
        blocks = refined

    representative = {}
    for state in states:
        representative.setdefault(blocks[state], state)
    order = sorted(representative, key=lambda block: representative[block])
    position = {block: i for i, block in enumerate(order)}
    transitions = []
    for block in order:
        state = representative[block]
        for letter in letters:
            edge = automaton.step(state, letter)
            transitions.append((position[block], position[blocks[edge.target]], letter, edge.reward))
    priorities = [automaton.priority(representative[block]) for block in order] \
        if automaton.has_priorities else None
    logger.debug(f"Minimized automaton from {automaton.num_states} to {len(order)} states.")
    return QuantAutomaton.from_transitions(automaton.inputs, automaton.outputs,
                                           [automaton.names[representative[block]] for block in order],
                                           position[blocks[automaton.initial]], transitions, priorities,
                                           automaton.dim)


def canonical_form(automaton: QuantAutomaton) -> tuple:
    """A description of the reachable part that is invariant under state renaming."""
    signals = tuple(sorted(automaton.signals))
    letters = all_letters(signals)
    number = {automaton.initial: 0}
    queue = deque([automaton.initial])
    rows = []
    while queue:
        state = queue.popleft()
        row = []
        for letter in letters:
            edge = automaton.step(state, letter)
            if edge.target not in number:
                number[edge.target] = len(number)
                queue.append(edge.target)
            row.append((str(letter), edge.reward, number[edge.target]))
        rows.append((automaton.priority(state) if automaton.has_priorities else None, tuple(row)))
    return tuple(sorted(automaton.inputs)), tuple(sorted(automaton.outputs)), automaton.dim, tuple(rows)


def is_isomorphic(a: QuantAutomaton, b: QuantAutomaton) -> bool:
    return canonical_form(a) == canonical_form(b)
