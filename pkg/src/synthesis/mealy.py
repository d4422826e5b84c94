import logging
from collections import deque
from collections.abc import Mapping, Sequence
from typing import NamedTuple

from games.core import Edge, GameGraph, Lasso, Letter, LexValue, all_letters
from games.exceptions import AlphabetMismatch, IncompleteAutomaton, MalformedLasso, ValidationError
from games.game_enums import Player
from games.lmpp import min_mpp_witnesses
from synthesis.automata import QuantAutomaton, Word

logger = logging.getLogger(__name__)


class Verification(NamedTuple):
    """The value a machine achieves against the worst environment, and the input/output word attaining it."""
    value: LexValue
    witness: Lasso
    word: Word


class MealyMachine:
    """An input-enabled deterministic transducer.

    `transitions` maps (state, input letter) to (output letter, successor); letters are over the
    machine's inputs and outputs respectively.
    """

    def __init__(self,
                 inputs: Sequence[str],
                 outputs: Sequence[str],
                 names: Sequence[str],
                 initial: int,
                 transitions: Mapping[tuple[int, Letter], tuple[Letter, int]]):
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.names = tuple(names)
        self.initial = initial
        if len(set(self.names)) != len(self.names):
            raise ValidationError('machine state names must be unique')
        if not 0 <= initial < len(self.names):
            raise ValidationError(f"initial state {initial} is not a state")

        self.transitions: dict[tuple[int, Letter], tuple[Letter, int]] = {}
        for (state, letter), (output, target) in transitions.items():
            if not 0 <= target < len(self.names):
                raise ValidationError(f"transition from {self.names[state]} leaves the state space")
            self.transitions[state, letter.project(self.inputs)] = (output.project(self.outputs), target)
        for state in range(len(self.names)):
            for letter in all_letters(self.inputs):
                if (state, letter) not in self.transitions:
                    raise IncompleteAutomaton(f"machine is not input-enabled at state {self.names[state]}: {letter}")

    def __eq__(self, other):
        if not isinstance(other, MealyMachine):
            return NotImplemented
        return (self.inputs, self.outputs, self.names, self.initial, self.transitions) == \
            (other.inputs, other.outputs, other.names, other.initial, other.transitions)

    def __hash__(self):
        return hash((self.inputs, self.outputs, self.names, self.initial))

    def __repr__(self):
        return f"MealyMachine(inputs={self.inputs}, outputs={self.outputs}, states={self.num_states})"

    @property
    def num_states(self) -> int:
        return len(self.names)

    def step(self, state: int, letter: Letter) -> tuple[Letter, int]:
        return self.transitions[state, letter.project(self.inputs)]

    def transduce(self, word: Word) -> Word:
        """The input/output word produced on an ultimately periodic input word."""
        if not word.cycle:
            raise MalformedLasso('a word needs a nonempty cycle')
        state = self.initial
        prefix = []
        for letter in word.prefix:
            output, state = self.step(state, letter)
            prefix.append(letter.project(self.inputs).join(output))

        seen: dict[tuple[int, int], int] = {}
        produced = []
        position = 0
        while (state, position) not in seen:
            seen[state, position] = len(produced)
            letter = word.cycle[position]
            output, state = self.step(state, letter)
            produced.append(letter.project(self.inputs).join(output))
            position = (position + 1) % len(word.cycle)
        start = seen[state, position]
        return Word(tuple(prefix + produced[:start]), tuple(produced[start:]))


def spec_product(automaton: QuantAutomaton, machine: MealyMachine) -> GameGraph:
    """The automaton run against all environment behaviors, with the machine fixing the outputs.

    Every product state belongs to Player2; each input letter gives one edge labeled by the joint letter.
    """
    if set(automaton.inputs) != set(machine.inputs) or set(automaton.outputs) != set(machine.outputs):
        raise AlphabetMismatch(f"machine signals {', '.join(machine.inputs)} / {', '.join(machine.outputs)} do not "
                               f"match automaton signals {', '.join(automaton.inputs)} / "
                               f"{', '.join(automaton.outputs)}")
    start = (automaton.initial, machine.initial)
    index = {start: 0}
    queue = deque([start])
    edges = []
    while queue:
        pair = queue.popleft()
        for letter in all_letters(machine.inputs):
            output, next_machine = machine.step(pair[1], letter)
            joint = letter.join(output).project(automaton.signals)
            step = automaton.step(pair[0], joint)
            successor = (step.target, next_machine)
            if successor not in index:
                index[successor] = len(index)
                queue.append(successor)
            edges.append(Edge(len(edges), index[pair], index[successor], step.reward, joint))

    pairs = sorted(index, key=index.get)
    priorities = [automaton.priority(p) for p, _ in pairs] if automaton.has_priorities else None
    return GameGraph([f"{automaton.names[p]}.{machine.names[m]}" for p, m in pairs],
                     [Player.PLAYER2] * len(pairs), 0, edges, priorities, automaton.dim)


def verify_value(automaton: QuantAutomaton, machine: MealyMachine) -> Verification:
    """The worst-case value of the machine under the automaton, with a witness environment behavior."""
    product = spec_product(automaton, machine)
    value, witness = min_mpp_witnesses(product, [product.initial])[product.initial]
    word = Word(tuple(edge.label for edge in witness.prefix), tuple(edge.label for edge in witness.cycle))
    logger.info(f"Machine value {value}, witnessed by {word}.")
    return Verification(value, witness, word)


def verify_cutoff(automaton: QuantAutomaton, machine: MealyMachine, cutoff: LexValue,
                  verification: Verification | None = None) -> bool:
    """Whether the machine achieves at least `cutoff`, reusing `verification` when already computed."""
    verification = verify_value(automaton, machine) if verification is None else verification
    return verification.value >= cutoff
