import logging
from collections import deque
from collections.abc import Sequence
from fractions import Fraction
from typing import NamedTuple

from configs.solving import DEFAULT_MEMORY_CAP, WORKERS
from games.core import Edge, FiniteMemoryStrategy, GameGraph, Letter, LexValue, MemorylessStrategy, all_letters, \
    as_finite_memory
from games.exceptions import EpsilonRequired, MalformedStrategy, UncertifiedValue, ValidationError
from games.game_enums import Player, Verdict
from games.lexmp import lex_mp_solve
from games.lmpp import epsilon_optimal_strategy, evaluate_strategy, find_witness, has_memoryless_optimal, solve_lmpp
from synthesis.automata import QuantAutomaton
from synthesis.mealy import MealyMachine

logger = logging.getLogger(__name__)


class SplitGame(NamedTuple):
    """A game in which the environment picks inputs at square states and the system answers at circle states.

    Environment states share their indices with the automaton states. `intermediate` maps
    (environment state, input letter) to the circle state answering it; `outputs_of` maps system edges
    to the output letter they play.
    """
    game: GameGraph
    automaton: QuantAutomaton
    intermediate: dict[tuple[int, Letter], int]
    outputs_of: dict[int, Letter]


class SynthesisResult(NamedTuple):
    machine: MealyMachine
    value: LexValue
    optimal: bool
    strategy: MemorylessStrategy | FiniteMemoryStrategy


class Realizability(NamedTuple):
    verdict: Verdict
    value: LexValue
    machine: MealyMachine | None


def split_to_game(automaton: QuantAutomaton, merge_inputs: bool = True) -> SplitGame:
    """Turn an automaton into a game where inputs and outputs are chosen in turn.

    Environment edges carry zero reward and system edges twice the automaton reward, so mean payoffs
    per game step equal those per automaton step. Circle states carry the largest priority, which never
    decides parity. With `merge_inputs`, inputs with identical rows of (successor, reward) per output
    share one circle state.
    """
    in_letters, out_letters = all_letters(automaton.inputs), all_letters(automaton.outputs)
    n = automaton.num_states
    names = list(automaton.names)
    owners = [Player.PLAYER2] * n
    priorities = [automaton.priority(state) for state in range(n)] if automaton.has_priorities else None
    top = max(priorities) if priorities else 0
    zero = (0,) * automaton.dim

    edges, intermediate, outputs_of = [], {}, {}
    for state in range(n):
        rows: dict[tuple, list[Letter]] = {}
        for letter in in_letters:
            steps = [automaton.step(state, letter.join(output)) for output in out_letters]
            row = tuple((step.target, step.reward) for step in steps)
            rows.setdefault(row if merge_inputs else (row, letter), []).append(letter)
        for inputs in rows.values():
            circle = len(names)
            names.append(f"{automaton.names[state]}/{'+'.join('&'.join(letter.entries) for letter in inputs)}")
            owners.append(Player.PLAYER1)
            if priorities is not None:
                priorities.append(top)
            edges.append(Edge(len(edges), state, circle, zero, inputs[0] if len(inputs) == 1 else None))
            intermediate.update({(state, letter): circle for letter in inputs})
            for output in out_letters:
                step = automaton.step(state, inputs[0].join(output))
                outputs_of[len(edges)] = output
                edges.append(Edge(len(edges), circle, step.target, tuple(2 * r for r in step.reward), output))

    game = GameGraph(names, owners, automaton.initial, edges, priorities, automaton.dim)
    logger.debug(f"Split game has {n} environment and {game.num_states - n} system states.")
    return SplitGame(game, automaton, intermediate, outputs_of)


def strategy_to_mealy(split: SplitGame, strategy: MemorylessStrategy | FiniteMemoryStrategy) -> MealyMachine:
    """Read a system strategy of the split game as a machine over the reachable (state, memory) pairs."""
    game, automaton = split.game, split.automaton
    strategy = as_finite_memory(game, strategy)
    if strategy.owner is not Player.PLAYER1:
        raise MalformedStrategy('only system strategies can be implemented by a machine')
    start = (game.initial, strategy.initial_memory)
    index = {start: 0}
    queue = deque([start])
    transitions = {}
    while queue:
        state, memory = pair = queue.popleft()
        for letter in all_letters(automaton.inputs):
            circle = split.intermediate[state, letter]
            at_circle = strategy.update[memory][circle]
            choice = strategy.moves[at_circle].get(circle)
            if choice is None or choice not in split.outputs_of or game.edge(choice).source != circle:
                raise MalformedStrategy(f"no system move at {game.names[circle]} with memory {at_circle}")
            target = game.edge(choice).target
            successor = (target, strategy.update[at_circle][target])
            if successor not in index:
                index[successor] = len(index)
                queue.append(successor)
            transitions[index[pair], letter] = (split.outputs_of[choice], index[successor])

    pairs = sorted(index, key=index.get)
    names = [automaton.names[state] if strategy.size == 1 else f"{automaton.names[state]}@{memory}"
             for state, memory in pairs]
    logger.info(f"Machine with {len(names)} states extracted from a strategy with memory {strategy.size}.")
    return MealyMachine(automaton.inputs, automaton.outputs, names, 0, transitions)


def synthesize(automaton: QuantAutomaton,
               epsilon: Sequence[Fraction] | None = None,
               memory_cap: int = DEFAULT_MEMORY_CAP,
               jobs: int = WORKERS) -> SynthesisResult:
    """Build a machine achieving the value of the automaton, or coming within `epsilon` of it.

    Without priorities, or when an optimal memoryless system strategy exists, the machine is optimal.
    Otherwise only epsilon-optimal machines exist and `epsilon` is required.
    """
    split = split_to_game(automaton)
    game = split.game
    if not game.has_priorities:
        solution = lex_mp_solve(game)
        return SynthesisResult(strategy_to_mealy(split, solution.p1_strategy), solution.values[game.initial],
                               True, solution.p1_strategy)

    solution = solve_lmpp(game, memory_cap, jobs=jobs)
    value = solution.values[game.initial]
    optimal = has_memoryless_optimal(game, solution, at=[game.initial])
    if optimal is not None:
        return SynthesisResult(strategy_to_mealy(split, optimal), value, True, optimal)
    if epsilon is None:
        raise EpsilonRequired(f"no optimal finite-state implementation achieves {value}; supply an epsilon")
    strategy = epsilon_optimal_strategy(game, epsilon, memory_cap, solution=solution, jobs=jobs)
    return SynthesisResult(strategy_to_mealy(split, strategy), value, False, strategy)


def classify_realizability(automaton: QuantAutomaton,
                           cutoff: LexValue,
                           memory_cap: int = DEFAULT_MEMORY_CAP,
                           jobs: int = WORKERS) -> Realizability:
    """Decide whether some machine achieves `cutoff`, only machines arbitrarily close to it do, or neither."""
    if cutoff.is_bottom:
        raise ValidationError('the cutoff must be a vector')
    split = split_to_game(automaton)
    game = split.game
    if not game.has_priorities:
        solution = lex_mp_solve(game)
        value = solution.values[game.initial]
        if cutoff <= value:
            return Realizability(Verdict.REALIZABLE, value, strategy_to_mealy(split, solution.p1_strategy))
        return Realizability(Verdict.UNREALIZABLE, value, None)

    solution = solve_lmpp(game, memory_cap, jobs=jobs)
    initial = game.initial
    lower, upper = solution.lower[initial], solution.upper[initial]
    if cutoff > upper:
        return Realizability(Verdict.UNREALIZABLE, upper, None)
    if cutoff <= lower:
        witness = solution.p1_witness
        if evaluate_strategy(game, witness)[initial] >= cutoff:
            return Realizability(Verdict.REALIZABLE, upper, strategy_to_mealy(split, witness))
    if initial not in solution.certified:
        raise UncertifiedValue(f"cannot decide cutoff {cutoff}: value lies in [{lower}, {upper}]")
    value = solution.values[initial]
    if cutoff < value:
        witness = find_witness(game, lambda achieved: achieved >= cutoff)
        if witness is None:
            raise UncertifiedValue(f"no machine achieving {cutoff} found below the value {value}")
        return Realizability(Verdict.REALIZABLE, value, strategy_to_mealy(split, witness))
    optimal = has_memoryless_optimal(game, solution, at=[initial])
    if optimal is not None:
        return Realizability(Verdict.REALIZABLE, value, strategy_to_mealy(split, optimal))
    return Realizability(Verdict.LIMIT_ONLY, value, None)
