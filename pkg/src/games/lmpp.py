import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import nullcontext
from fractions import Fraction
from functools import partial
from itertools import islice, product
from multiprocessing.pool import Pool
from typing import NamedTuple

import networkx as nx
from tqdm import tqdm

from configs.solving import DEFAULT_MEMORY_CAP, MAX_ENUMERATED_STRATEGIES, MAX_TEMPLATE_ROUNDS, WORKERS
from games.core import BOTTOM, FiniteMemoryStrategy, GameGraph, Lasso, LexValue, MemorylessStrategy, Vector, \
    as_finite_memory, complete_moves, format_vector, is_on_grid, mean_vector, vector_add, vector_sub
from games.exceptions import DimensionMismatch, MalformedStrategy, ResourceCapExceeded, UncertifiedValue, \
    ValidationError
from games.game_enums import Player
from games.lexmp import karp_cycle, lasso_to, lex_mp_solve, lex_one_player_values, scalarize
from games.parity import WinningRegions, attractor, odd_cycle_reachers, odd_lasso_exists, solve_parity

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64


class MppWitness(NamedTuple):
    value: LexValue
    lasso: Lasso


class CertifiedSolution(NamedTuple):
    """Values of a mean-payoff parity game bracketed by exact evaluations of explicit strategies.

    `lower` and `upper` are the best guarantees of the recorded Player1 and Player2 witnesses. `values`
    reports `upper`; `gap` is zero where the value is certified exact and `upper - lower` elsewhere
    (None for an infinite gap); `slack` is `values - lower`, zero where the Player1 witness is optimal.
    """
    values: dict[int, LexValue]
    lower: dict[int, LexValue]
    upper: dict[int, LexValue]
    gap: dict[int, Vector | None]
    slack: dict[int, Vector | None]
    p1_witnesses: dict[int, FiniteMemoryStrategy]
    p2_witnesses: dict[int, FiniteMemoryStrategy]
    certified: frozenset[int]
    initial: int
    memory: int

    @property
    def p1_witness(self) -> FiniteMemoryStrategy:
        return self.p1_witnesses[self.initial]

    @property
    def p2_witness(self) -> FiniteMemoryStrategy:
        return self.p2_witnesses[self.initial]

    def is_certified(self, states: Iterable[int] | None = None) -> bool:
        return self.certified.issuperset(self.values if states is None else states)


class Template(NamedTuple):
    """The ingredients of a three-phase strategy for one even priority."""
    priority: int
    mp_strategy: MemorylessStrategy
    attr_strategy: MemorylessStrategy
    target: frozenset[int]

    def build(self, graph: GameGraph, rounds: int) -> FiniteMemoryStrategy:
        return three_phase_strategy(graph, self.mp_strategy, self.attr_strategy, self.target, rounds, check=False)


# ----------------------------------------------------------------------------
# Single-player solvers

def single_player_max_mpp(graph: GameGraph) -> dict[int, LexValue]:
    """Supremum of the mean-payoff parity payoff when one agent resolves every choice.

    The agent can dwell ever longer on the best cycle of a component whose least priority is even,
    returning to that priority in between, so the value is the best mean cycle of such a component.
    """
    weights = scalarize(graph).weights
    values = {state: BOTTOM for state in range(graph.num_states)}
    present = sorted({graph.priority(state) for state in range(graph.num_states)})
    for q in (p for p in present if p % 2 == 0):
        band = graph.digraph.subgraph(state for state in range(graph.num_states) if graph.priority(state) >= q)
        for component in nx.strongly_connected_components(band):
            anchors = [state for state in sorted(component) if graph.priority(state) == q]
            inner = [edge for state in sorted(component) for edge in graph.out_edges[state] if edge.target in component]
            if not anchors or not inner:
                continue
            _, cycle = karp_cycle(sorted(component), inner, weights, minimize=False)
            value = LexValue(mean_vector([edge.reward for edge in cycle]))
            for state in nx.ancestors(graph.digraph, anchors[0]) | component:
                if value > values[state]:
                    values[state] = value
    return values


def single_player_min_mpp(graph: GameGraph) -> dict[int, LexValue]:
    """Infimum of the mean-payoff parity payoff when one agent resolves every choice."""
    bad = odd_cycle_reachers(graph)
    values = lex_one_player_values(graph, minimize=True)
    return {state: BOTTOM if state in bad else values[state].vector for state in range(graph.num_states)}


def min_mpp_witnesses(graph: GameGraph, sources: Iterable[int] | None = None) -> dict[int, MppWitness]:
    """Like `single_player_min_mpp`, with a lasso attaining the value from every source."""
    sources = range(graph.num_states) if sources is None else sources
    bad = odd_cycle_reachers(graph)
    values = lex_one_player_values(graph, minimize=True)
    witnesses = {}
    for state in sources:
        if state in bad:
            witnesses[state] = MppWitness(BOTTOM, odd_lasso_exists(graph, state))
        else:
            witnesses[state] = MppWitness(values[state].vector, lasso_to(graph, state, values[state].cycle))
    return witnesses


def evaluate_strategy(graph: GameGraph, strategy: MemorylessStrategy | FiniteMemoryStrategy) -> dict[int, LexValue]:
    """Exact value of a fixed strategy against a best-responding opponent, from every state at initial memory.

    Player1 maximizes: a Player1 strategy is met by the minimizing response and vice versa.
    """
    strategy = as_finite_memory(graph, strategy)
    joint = strategy.product(graph)
    solve = single_player_min_mpp if strategy.owner is Player.PLAYER1 else single_player_max_mpp
    values = solve(joint.graph)
    return {state: values[joint.state(state, strategy.initial_memory)] for state in range(graph.num_states)}


def _evaluate_all(graph: GameGraph, strategies: Sequence, pool: Pool | None) -> list[dict[int, LexValue]]:
    if pool is not None and len(strategies) > 1:
        return pool.map(partial(evaluate_strategy, graph), strategies)
    return [evaluate_strategy(graph, strategy) for strategy in strategies]


# ----------------------------------------------------------------------------
# Strategy spaces

def strategy_count(graph: GameGraph, player: Player, memory: int) -> int:
    """Number of strategies of `player` with exactly `memory` memory states."""
    count = memory ** (memory * graph.num_states) if memory > 1 else 1
    for state in graph.states_of(player):
        count *= len(graph.out_edges[state]) ** memory
    return count


def memoryless_strategies(graph: GameGraph, player: Player) -> Iterator[MemorylessStrategy]:
    """All memoryless strategies of `player`, in index order of the chosen edges."""
    owned = graph.states_of(player)
    for picks in product(*([edge.index for edge in graph.out_edges[state]] for state in owned)):
        yield MemorylessStrategy(player, dict(zip(owned, picks)))


def enumerate_strategies(graph: GameGraph, player: Player, memory: int) -> Iterator[FiniteMemoryStrategy]:
    n = graph.num_states
    owned = graph.states_of(player)
    options = [[edge.index for edge in graph.out_edges[state]] for state in owned]
    tables = product(range(memory), repeat=memory * n) if memory > 1 else [(0,) * n]
    for table in tables:
        update = tuple(tuple(table[m * n:(m + 1) * n]) for m in range(memory))
        for picks in product(*(options * memory)):
            moves = tuple(dict(zip(owned, picks[m * len(owned):(m + 1) * len(owned)])) for m in range(memory))
            yield FiniteMemoryStrategy(player, memory, 0, update, moves)


# ----------------------------------------------------------------------------
# Three-phase strategies

def _check_forcing(graph: GameGraph, owner: Player, mp_moves: dict[int, int], attr_moves: dict[int, int],
                   target: frozenset[int]) -> None:
    region = attractor(graph, owner, target).region
    used = nx.DiGraph()
    used.add_nodes_from(range(graph.num_states))
    for state in range(graph.num_states):
        if graph.owners[state] is owner:
            used.add_edges_from((state, graph.edge(moves[state]).target) for moves in (mp_moves, attr_moves))
        else:
            used.add_edges_from((state, edge.target) for edge in graph.out_edges[state])
    for state in sorted(nx.descendants(used, graph.initial) | {graph.initial}):
        if state not in region:
            raise MalformedStrategy(f"target is not forcibly reachable from state {graph.names[state]}")


def three_phase_strategy(graph: GameGraph,
                         mp_strategy: MemorylessStrategy,
                         attr_strategy: MemorylessStrategy,
                         target: Iterable[int],
                         rounds: int,
                         check: bool = True) -> FiniteMemoryStrategy:
    """Alternate `rounds` moves of `mp_strategy` with a visit to `target` forced by `attr_strategy`.

    Memory 0..rounds-1 counts arrivals at owned states while the mean-payoff strategy is played;
    memory `rounds` plays the attractor strategy until the target is reached; memory `rounds + 1`
    marks the visit and resets the count on the next arrival.
    """
    if rounds < 1:
        raise ValidationError(f"phase length must be positive, got {rounds}")
    owner = mp_strategy.owner
    target = frozenset(target)
    mp_moves = dict(mp_strategy.validate(graph).moves)
    attr_moves = mp_moves | dict(attr_strategy.moves)
    MemorylessStrategy(owner, attr_moves).validate(graph)
    if check:
        _check_forcing(graph, owner, mp_moves, attr_moves, target)

    attracting, leaving = rounds, rounds + 1
    update = []
    for memory in range(rounds + 2):
        row = []
        for state in range(graph.num_states):
            owned = graph.owners[state] is owner
            if memory == leaving:
                row.append(0)
            elif memory == attracting or (owned and memory + 1 == rounds):
                row.append(leaving if state in target else attracting)
            else:
                row.append(memory + 1 if owned else memory)
        update.append(tuple(row))
    moves = (mp_moves,) * rounds + (attr_moves, mp_moves)
    return FiniteMemoryStrategy(owner, rounds + 2, 0, tuple(update), moves)


def _lift(strategy: MemorylessStrategy, kept: Sequence[int]) -> dict[int, int]:
    return {kept[state]: index for state, index in strategy.moves.items()}


def _is_subgame(graph: GameGraph, states: frozenset[int]) -> bool:
    for state in states:
        inside = [edge for edge in graph.out_edges[state] if edge.target in states]
        if not inside or (graph.owners[state] is Player.PLAYER2 and len(inside) != len(graph.out_edges[state])):
            return False
    return True


def build_templates(graph: GameGraph, regions: WinningRegions) -> list[Template]:
    """Three-phase templates for Player1 inside its parity region, one or two per even priority."""
    win = regions.w1
    if not win:
        return []
    fallback = complete_moves(graph, Player.PLAYER1, regions.strat1.moves)
    sub, kept = graph.subgame(win)
    mp_moves = fallback | _lift(lex_mp_solve(sub.without_priorities()).p1_strategy, kept)

    templates = []
    for q in sorted({graph.priority(state) for state in win if graph.priority(state) % 2 == 0}):
        target = frozenset(state for state in win if graph.priority(state) == q)
        reach = attractor(graph, Player.PLAYER1, target, within=win)
        templates.append(Template(q, MemorylessStrategy(Player.PLAYER1, mp_moves),
                                  MemorylessStrategy(Player.PLAYER1, fallback | reach.strategy), target))

        band = frozenset(state for state in win if graph.priority(state) >= q)
        if band != win and _is_subgame(graph, band):
            band_sub, band_kept = graph.subgame(band)
            entry = attractor(graph, Player.PLAYER1, band, within=win)
            inner = attractor(graph, Player.PLAYER1, target, within=band)
            band_moves = fallback | entry.strategy | _lift(lex_mp_solve(band_sub.without_priorities()).p1_strategy,
                                                           band_kept)
            templates.append(Template(q, MemorylessStrategy(Player.PLAYER1, band_moves),
                                      MemorylessStrategy(Player.PLAYER1, fallback | entry.strategy | inner.strategy),
                                      target))
    logger.debug(f"Built {len(templates)} three-phase templates.")
    return templates


# ----------------------------------------------------------------------------
# Certified bounds

def _certified(lower: LexValue, upper: LexValue | None, n: int) -> bool:
    """Whether the bounds pin down the value, assuming values lie on the grid of denominators at most n."""
    if upper is None:
        return False
    if lower == upper:
        return True
    if lower.is_bottom or upper.is_bottom or not is_on_grid(upper, n):
        return False
    return lower.vector[:-1] == upper.vector[:-1] and upper.vector[-1] - lower.vector[-1] < Fraction(1, n * n)


class _Bounds:
    """Running lower and upper bounds with the strategies attaining them."""

    def __init__(self, graph: GameGraph, gap_target: Vector | None, pool: Pool | None, progress: bool):
        self.graph = graph
        self.gap_target = gap_target
        self.pool = pool
        self.progress = progress
        self.lower: dict[int, LexValue] = {state: BOTTOM for state in range(graph.num_states)}
        self.upper: dict[int, LexValue | None] = {state: None for state in range(graph.num_states)}
        self.witnesses: dict[Player, dict[int, FiniteMemoryStrategy]] = {player: {} for player in Player}

    def gap(self, state: int) -> Vector | None:
        if _certified(self.lower[state], self.upper[state], self.graph.num_states):
            return (Fraction(0),) * self.graph.dim
        if self.upper[state] is None:
            return None
        return vector_sub(self.upper[state], self.lower[state])

    @property
    def open(self) -> list[int]:
        """States whose bounds still need tightening."""
        states = []
        for state in range(self.graph.num_states):
            if _certified(self.lower[state], self.upper[state], self.graph.num_states):
                continue
            gap = self.gap(state)
            if self.gap_target is None or gap is None or not gap < self.gap_target:
                states.append(state)
        return states

    def _record(self, player: Player, strategy: FiniteMemoryStrategy, values: dict[int, LexValue]) -> set[int]:
        improved = set()
        witnesses = self.witnesses[player]
        for state, value in values.items():
            if player is Player.PLAYER1:
                better = value > self.lower[state]
                if better:
                    self.lower[state] = value
            else:
                better = self.upper[state] is None or value < self.upper[state]
                if better:
                    self.upper[state] = value
            if better or state not in witnesses:
                witnesses[state] = strategy
            if better:
                improved.add(state)
        return improved

    def offer(self, player: Player, strategies: Iterable, total: int | None = None,
              desc: str | None = None) -> set[int]:
        """Evaluate candidate strategies of `player` and tighten the bounds; returns the improved states."""
        improved = set()
        iterator = iter(strategies)
        with tqdm(total=total, desc=desc, disable=not self.progress, leave=False) as bar:
            while chunk := [as_finite_memory(self.graph, s) for s in islice(iterator, CHUNK_SIZE)]:
                for strategy, values in zip(chunk, _evaluate_all(self.graph, chunk, self.pool)):
                    improved |= self._record(player, strategy, values)
                bar.update(len(chunk))
                if not self.open:
                    break
        return improved

    def solution(self, memory: int) -> CertifiedSolution:
        n, dim = self.graph.num_states, self.graph.dim
        zero = (Fraction(0),) * dim
        certified = frozenset(state for state in range(n) if _certified(self.lower[state], self.upper[state], n))
        slack = {state: zero if self.lower[state] == self.upper[state] else vector_sub(self.upper[state],
                                                                                        self.lower[state])
                 for state in range(n)}
        return CertifiedSolution(values=dict(self.upper),
                                 lower=dict(self.lower),
                                 upper=dict(self.upper),
                                 gap={state: self.gap(state) for state in range(n)},
                                 slack=slack,
                                 p1_witnesses=dict(self.witnesses[Player.PLAYER1]),
                                 p2_witnesses=dict(self.witnesses[Player.PLAYER2]),
                                 certified=certified,
                                 initial=self.graph.initial,
                                 memory=memory)


def _parity_vacuous(graph: GameGraph) -> bool:
    return not graph.has_priorities or all(p % 2 == 0 for p in graph.priorities)


def _from_lex_mp(graph: GameGraph) -> CertifiedSolution:
    solution = lex_mp_solve(graph.without_priorities())
    n = graph.num_states
    zero = (Fraction(0),) * graph.dim
    p1 = solution.p1_strategy.as_finite_memory(graph)
    p2 = solution.p2_strategy.as_finite_memory(graph)
    return CertifiedSolution(values=dict(solution.values),
                             lower=dict(solution.values),
                             upper=dict(solution.values),
                             gap={state: zero for state in range(n)},
                             slack={state: zero for state in range(n)},
                             p1_witnesses={state: p1 for state in range(n)},
                             p2_witnesses={state: p2 for state in range(n)},
                             certified=frozenset(range(n)),
                             initial=graph.initial,
                             memory=1)


def solve_lmpp(graph: GameGraph,
               memory_cap: int = DEFAULT_MEMORY_CAP,
               gap_target: Sequence[Fraction] | None = None,
               jobs: int = WORKERS,
               progress: bool = False,
               max_strategies: int = MAX_ENUMERATED_STRATEGIES) -> CertifiedSolution:
    """Compute the values of a lexicographic mean-payoff parity game.

    Player2's parity region gets bottom. Elsewhere the values are bracketed between the best evaluated
    Player1 and Player2 strategies: parity and mean-payoff seeds, all memoryless strategies, three-phase
    templates with growing phase length and finally all strategies with 2..memory_cap memory states.
    States whose bounds cannot be certified within the caps are reported with a nonzero gap.
    """
    if _parity_vacuous(graph):
        return _from_lex_mp(graph)
    if gap_target is not None:
        gap_target = tuple(Fraction(component) for component in gap_target)
        if len(gap_target) != graph.dim:
            raise DimensionMismatch(f"gap target {format_vector(gap_target)} does not match dimension {graph.dim}")

    with Pool(jobs) if jobs > 1 else nullcontext() as pool:
        bounds = _Bounds(graph, gap_target, pool, progress)
        explored = _tighten(bounds, memory_cap, max_strategies)

    solution = bounds.solution(explored)
    uncertified = sorted(set(range(graph.num_states)) - solution.certified)
    if uncertified:
        logger.warning(f"Values of {len(uncertified)} states are not certified, "
                       f"e.g. {graph.names[uncertified[0]]} in [{solution.lower[uncertified[0]]}, "
                       f"{solution.upper[uncertified[0]]}].")
    return solution


def _tighten(bounds: _Bounds, memory_cap: int, max_strategies: int) -> int:
    """Offer the candidate strategies in order until every state is settled; returns the largest memory tried."""
    graph = bounds.graph
    regions = solve_parity(graph)
    erased = lex_mp_solve(graph.without_priorities())
    bounds.offer(Player.PLAYER2, [MemorylessStrategy(Player.PLAYER2,
                                                     complete_moves(graph, Player.PLAYER2, regions.strat2.moves)),
                                  erased.p2_strategy])
    bounds.offer(Player.PLAYER1, [MemorylessStrategy(Player.PLAYER1,
                                                     complete_moves(graph, Player.PLAYER1, regions.strat1.moves)),
                                  erased.p1_strategy])

    for player in (Player.PLAYER2, Player.PLAYER1):
        count = strategy_count(graph, player, 1)
        if bounds.open and count <= max_strategies:
            bounds.offer(player, memoryless_strategies(graph, player), count, f"memoryless {player.value}")

    for template in build_templates(graph, regions) if bounds.open else []:
        rounds = 1
        while rounds <= MAX_TEMPLATE_ROUNDS and bounds.open:
            improved = bounds.offer(Player.PLAYER1, [template.build(graph, rounds)])
            logger.debug(f"Template for priority {template.priority} with {rounds} rounds "
                         f"improved {len(improved)} states.")
            if not improved and rounds > 1:
                break
            rounds *= 2

    explored = 1
    for memory in range(2, memory_cap + 1):
        if not bounds.open:
            break
        explored = memory
        for player in (Player.PLAYER2, Player.PLAYER1):
            count = strategy_count(graph, player, memory)
            if count > max_strategies:
                logger.warning(f"Skipping {count} {player.value} strategies with memory {memory}, "
                               f"more than the cap of {max_strategies}.")
                continue
            bounds.offer(player, enumerate_strategies(graph, player, memory), count, f"memory {memory} {player.value}")
    return explored


# ----------------------------------------------------------------------------
# Witness search

def _within(target: LexValue, epsilon: Vector) -> Callable[[LexValue], bool]:
    def accept(value: LexValue) -> bool:
        if target.is_bottom or value == target:
            return True
        return not value.is_bottom and vector_add(value, epsilon) > target
    return accept


def _smallest_rounds(graph: GameGraph, template: Template, good: Callable) -> int | None:
    rounds = 1
    while not good(template.build(graph, rounds)):
        rounds *= 2
        if rounds > MAX_TEMPLATE_ROUNDS:
            return None
    low, high = rounds // 2, rounds
    while high - low > 1:
        middle = (low + high) // 2
        if good(template.build(graph, middle)):
            high = middle
        else:
            low = middle
    return high


def find_witness(graph: GameGraph, accept: Callable[[LexValue], bool], regions: WinningRegions | None = None,
                 max_strategies: int = MAX_ENUMERATED_STRATEGIES) -> FiniteMemoryStrategy | None:
    """The simplest Player1 strategy found whose value at the initial state is accepted.

    Memoryless candidates come first, then three-phase templates with the smallest accepted phase length.
    """
    regions = solve_parity(graph) if regions is None else regions

    def good(strategy) -> bool:
        return accept(evaluate_strategy(graph, strategy)[graph.initial])

    seeds = [MemorylessStrategy(Player.PLAYER1, complete_moves(graph, Player.PLAYER1, regions.strat1.moves)),
             lex_mp_solve(graph.without_priorities()).p1_strategy]
    if strategy_count(graph, Player.PLAYER1, 1) <= max_strategies:
        seeds = [*seeds, *memoryless_strategies(graph, Player.PLAYER1)]
    for strategy in seeds:
        if good(strategy):
            return strategy.as_finite_memory(graph)

    for template in build_templates(graph, regions):
        rounds = _smallest_rounds(graph, template, good)
        if rounds is not None:
            logger.info(f"Three-phase witness for priority {template.priority} with {rounds} rounds.")
            return template.build(graph, rounds)
    return None


def epsilon_optimal_strategy(graph: GameGraph,
                             epsilon: Sequence[Fraction],
                             memory_cap: int = DEFAULT_MEMORY_CAP,
                             solution: CertifiedSolution | None = None,
                             jobs: int = WORKERS,
                             max_strategies: int = MAX_ENUMERATED_STRATEGIES) -> FiniteMemoryStrategy:
    """A finite-memory Player1 strategy whose value at the initial state is within `epsilon` of the game value.

    Within means strictly: the strategy's value plus `epsilon` exceeds the value lexicographically.
    """
    epsilon = tuple(Fraction(component) for component in epsilon)
    if len(epsilon) != graph.dim:
        raise DimensionMismatch(f"epsilon {format_vector(epsilon)} does not match dimension {graph.dim}")
    if any(component <= 0 for component in epsilon):
        raise ValidationError(f"epsilon must be positive in every component, got {format_vector(epsilon)}")
    if _parity_vacuous(graph):
        return lex_mp_solve(graph.without_priorities()).p1_strategy.as_finite_memory(graph)

    solution = solve_lmpp(graph, memory_cap, jobs=jobs, max_strategies=max_strategies) if solution is None else solution
    target = solution.values[graph.initial]
    accept = _within(target, epsilon)
    witness = find_witness(graph, accept, max_strategies=max_strategies)
    if witness is None and accept(evaluate_strategy(graph, solution.p1_witness)[graph.initial]):
        witness = solution.p1_witness
    if witness is None:
        raise ResourceCapExceeded(f"no strategy within {format_vector(epsilon)} of {target} found")
    return witness


def has_memoryless_optimal(graph: GameGraph,
                           solution: CertifiedSolution | None = None,
                           at: Iterable[int] | None = None,
                           max_strategies: int = MAX_ENUMERATED_STRATEGIES) -> MemorylessStrategy | None:
    """An optimal memoryless Player1 strategy on the states `at` (all states by default), or None.

    None means Player1 has no optimal finite-memory strategy there either.
    """
    if _parity_vacuous(graph):
        return lex_mp_solve(graph.without_priorities()).p1_strategy
    solution = solve_lmpp(graph, max_strategies=max_strategies) if solution is None else solution
    states = sorted(range(graph.num_states) if at is None else at)
    for state in states:
        if state not in solution.certified:
            raise UncertifiedValue(f"value at state {graph.names[state]} is not certified: "
                                   f"[{solution.lower[state]}, {solution.upper[state]}]")
    count = strategy_count(graph, Player.PLAYER1, 1)
    if count > max_strategies:
        raise ResourceCapExceeded(f"{count} memoryless strategies exceed the cap of {max_strategies}")
    for strategy in memoryless_strategies(graph, Player.PLAYER1):
        values = evaluate_strategy(graph, strategy)
        if all(values[state] == solution.values[state] for state in states):
            return strategy
    return None
