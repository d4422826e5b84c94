import logging
from collections.abc import Mapping, Sequence
from fractions import Fraction
from typing import NamedTuple

import networkx as nx

from configs.solving import MAX_VALUE_ITERATION_STEPS
from games.core import Edge, GameGraph, Lasso, LexValue, MemorylessStrategy, lasso_mean, mean_vector, play_lasso
from games.exceptions import ResourceCapExceeded
from games.game_enums import Mode, Player

logger = logging.getLogger(__name__)


class ScalarizedGame(NamedTuple):
    """A game graph whose reward vectors were folded into one integer weight per edge."""
    graph: GameGraph
    weights: Mapping[int, int]
    multipliers: tuple[int, ...]

    @property
    def max_weight(self) -> int:
        return max(self.weights.values(), default=0)

    def on(self, graph: GameGraph) -> 'ScalarizedGame':
        """Reuse the weights for a restriction of the same graph."""
        return ScalarizedGame(graph, self.weights, self.multipliers)


class CycleValue(NamedTuple):
    """The extreme cycle mean reachable from a state together with a simple cycle attaining it."""
    mean: Fraction
    cycle: tuple[Edge, ...]

    @property
    def vector(self) -> LexValue:
        return LexValue(mean_vector([edge.reward for edge in self.cycle]))


class LexMeanPayoffSolution(NamedTuple):
    values: dict[int, LexValue]
    p1_strategy: MemorylessStrategy
    p2_strategy: MemorylessStrategy


# ----------------------------------------------------------------------------
# Scalarization

def compute_multipliers(graph: GameGraph) -> tuple[int, ...]:
    """Multipliers making the weighted sum order-preserving on cycles of length at most n.

    The last component gets multiplier 1; every earlier component dominates n^2 times the largest
    weighted tail sum an edge can carry, plus one.
    """
    n = graph.num_states
    multipliers = [1] * graph.dim
    for i in reversed(range(graph.dim - 1)):
        tail = max(sum(multipliers[j] * edge.reward[j] for j in range(i + 1, graph.dim)) for edge in graph.edges)
        multipliers[i] = n * n * tail + 1
    return tuple(multipliers)


def scalarize(graph: GameGraph) -> ScalarizedGame:
    multipliers = compute_multipliers(graph)
    weights = {edge.index: sum(m * r for m, r in zip(multipliers, edge.reward)) for edge in graph.edges}
    return ScalarizedGame(graph, weights, multipliers)


# ----------------------------------------------------------------------------
# One-player graphs

def _first_cycle(walk: Sequence[Edge]) -> tuple[Edge, ...]:
    seen = {walk[0].source: 0}
    for i, edge in enumerate(walk, start=1):
        if edge.target in seen:
            return tuple(walk[seen[edge.target]:i])
        seen[edge.target] = i
    raise AssertionError('a walk of n edges over n states must repeat a state')


def karp_cycle(states: Sequence[int], edges: Sequence[Edge], weights: Mapping[int, int],
               minimize: bool = True) -> tuple[Fraction, tuple[Edge, ...]]:
    """Extreme cycle mean of a strongly connected component and a simple cycle attaining it.

    `edges` are the edges inside the component, which must contain at least one cycle.
    """
    sign = 1 if minimize else -1
    n = len(states)
    position = {state: i for i, state in enumerate(states)}
    edges = sorted(edges, key=lambda edge: edge.index)

    # table[k][v]: least weight of a walk with exactly k edges from states[0] to v
    table: list[list[int | None]] = [[None] * n for _ in range(n + 1)]
    parent: list[list[Edge | None]] = [[None] * n for _ in range(n + 1)]
    table[0][0] = 0
    for k in range(1, n + 1):
        previous, current, links = table[k - 1], table[k], parent[k]
        for edge in edges:
            u = position[edge.source]
            if previous[u] is None:
                continue
            v = position[edge.target]
            candidate = previous[u] + sign * weights[edge.index]
            if current[v] is None or candidate < current[v]:
                current[v] = candidate
                links[v] = edge

    best, best_state = None, None
    for v in range(n):
        if table[n][v] is None:
            continue
        worst = max(Fraction(table[n][v] - table[k][v], n - k) for k in range(n) if table[k][v] is not None)
        if best is None or worst < best:
            best, best_state = worst, v

    walk = []
    v = best_state
    for k in range(n, 0, -1):
        edge = parent[k][v]
        walk.append(edge)
        v = position[edge.source]
    walk.reverse()
    return sign * best, _first_cycle(walk)


def one_player_values(graph: GameGraph, weights: Mapping[int, int], minimize: bool) -> dict[int, CycleValue]:
    """For every state, the extreme cycle mean among cycles reachable from it, ignoring owners."""
    digraph = graph.digraph
    components = list(nx.strongly_connected_components(digraph))
    condensed = nx.condensation(digraph, scc=components)

    local: dict[int, tuple[Fraction, tuple[Edge, ...]]] = {}
    for c, members in enumerate(components):
        inner = [edge for state in sorted(members) for edge in graph.out_edges[state] if edge.target in members]
        if inner:
            local[c] = karp_cycle(sorted(members), inner, weights, minimize)

    better = (lambda a, b: a < b) if minimize else (lambda a, b: a > b)
    best: dict[int, tuple[Fraction, int]] = {}
    for c in reversed(list(nx.topological_sort(condensed))):
        options = [(local[c][0], c)] if c in local else []
        options.extend(best[successor] for successor in sorted(condensed.successors(c)))
        choice = options[0]
        for option in options[1:]:
            if better(option[0], choice[0]):
                choice = option
        best[c] = choice

    mapping = condensed.graph['mapping']
    return {state: CycleValue(best[mapping[state]][0], local[best[mapping[state]][1]][1])
            for state in range(graph.num_states)}


def lasso_to(graph: GameGraph, source: int, cycle: tuple[Edge, ...]) -> Lasso:
    """The lasso reaching `cycle` from `source` along a shortest path."""
    return Lasso(graph.shortest_edges(source, cycle[0].source), cycle)


def extreme_mean_cycle(graph: GameGraph, mode: Mode,
                      weights: Mapping[int, int] | None = None) -> tuple[Fraction, Lasso]:
    """Minimum or maximum cycle mean reachable from the initial state, with a witness lasso."""
    weights = scalarize(graph).weights if weights is None else weights
    value = one_player_values(graph, weights, minimize=mode is Mode.MIN)[graph.initial]
    return value.mean, lasso_to(graph, graph.initial, value.cycle)


def lex_one_player_values(graph: GameGraph, minimize: bool) -> dict[int, CycleValue]:
    """Lexicographically extreme cycle means, ignoring owners and priorities."""
    return one_player_values(graph, scalarize(graph).weights, minimize)


# ----------------------------------------------------------------------------
# Two-player mean-payoff games

def _greedy_moves(graph: GameGraph, player: Player, choices: Sequence[int]) -> dict[int, int]:
    return {state: choices[state] for state in graph.states_of(player)}


def _filtered_moves(game: ScalarizedGame, maximizer: Player, estimate: Sequence[Fraction],
                    previous: Sequence[int]) -> list[int]:
    """Greedy moves restricted to edges whose target keeps the estimated value."""
    graph = game.graph
    choices = []
    for state in range(graph.num_states):
        candidates = [edge for edge in graph.out_edges[state] if estimate[edge.target] == estimate[state]] \
            or list(graph.out_edges[state])
        score = [game.weights[edge.index] + previous[edge.target] for edge in candidates]
        pick = max(score) if graph.owners[state] is maximizer else min(score)
        choices.append(candidates[score.index(pick)].index)
    return choices


def _certify(game: ScalarizedGame, maximizer: Player, choices: Sequence[int]) -> dict[int, Fraction] | None:
    """Check a pair of positional strategies by exact best responses; return the values if they meet."""
    graph = game.graph
    minimizer = maximizer.opponent
    lower = one_player_values(graph.restrict(_greedy_moves(graph, maximizer, choices)), game.weights, True)
    upper = one_player_values(graph.restrict(_greedy_moves(graph, minimizer, choices)), game.weights, False)
    if all(lower[state].mean == upper[state].mean for state in range(graph.num_states)):
        return {state: value.mean for state, value in lower.items()}
    return None


def mp_value(game: ScalarizedGame, maximizer: Player = Player.PLAYER1) -> dict[int, Fraction]:
    """Exact scalar mean-payoff values of a two-player game where `maximizer` maximizes.

    Runs value iteration up to a step count after which rounding to the nearest fraction with
    denominator at most n is exact. At checkpoints the greedy strategies are certified by exact
    best responses, which usually settles the values long before that bound.
    """
    graph = game.graph
    n = graph.num_states
    bound = 8 * n ** 3 * max(game.max_weight, 1)
    if bound > MAX_VALUE_ITERATION_STEPS:
        raise ResourceCapExceeded(f"value iteration would need {bound} steps, "
                                  f"more than the cap of {MAX_VALUE_ITERATION_STEPS}")

    adjacency = [[(game.weights[edge.index], edge.target, edge.index) for edge in graph.out_edges[state]]
                 for state in range(n)]
    maximizing = [owner is maximizer for owner in graph.owners]
    values = [0] * n
    checkpoint = n
    for k in range(1, bound + 1):
        previous = values
        values = [0] * n
        choices = [0] * n
        for state in range(n):
            best_total, best_edge = None, None
            for weight, target, index in adjacency[state]:
                total = weight + previous[target]
                if best_total is None or (total > best_total if maximizing[state] else total < best_total):
                    best_total, best_edge = total, index
            values[state] = best_total
            choices[state] = best_edge
        if k == checkpoint and k < bound:
            checkpoint *= 2
            certified = _certify(game, maximizer, choices)
            if certified is None:
                estimate = [Fraction(value, k).limit_denominator(n) for value in values]
                filtered = _filtered_moves(game, maximizer, estimate, previous)
                if filtered != choices:
                    certified = _certify(game, maximizer, filtered)
            if certified is not None:
                logger.debug(f"Mean-payoff values certified after {k} of {bound} steps.")
                return certified
    return {state: Fraction(values[state], bound).limit_denominator(n) for state in range(n)}


def _extract(game: ScalarizedGame, values: Mapping[int, Fraction], maximizer: Player,
             player: Player) -> MemorylessStrategy:
    """Fix value-preserving edges one state at a time, re-solving to keep the values intact."""
    graph = game.graph
    committed: dict[int, int] = {}
    for state in graph.states_of(player):
        candidates = [edge for edge in graph.out_edges[state] if values[edge.target] == values[state]]
        if not candidates:
            raise AssertionError(f"no value-preserving edge at state {graph.names[state]}")
        choice = candidates[-1]
        for edge in candidates[:-1]:
            restricted = game.on(graph.restrict(committed | {state: edge.index}))
            if mp_value(restricted, maximizer) == values:
                choice = edge
                break
        committed[state] = choice.index
    return MemorylessStrategy(player, committed)


def lex_mp_solve(graph: GameGraph, maximizer: Player = Player.PLAYER1) -> LexMeanPayoffSolution:
    """Solve a lexicographic mean-payoff game; priorities, if any, are ignored.

    Returns the value vector of every state and optimal memoryless strategies for both players.
    """
    game = scalarize(graph)
    values = mp_value(game, maximizer)
    strategies = {player: _extract(game, values, maximizer, player) for player in Player}
    moves = dict(strategies[Player.PLAYER1].moves) | dict(strategies[Player.PLAYER2].moves)
    vectors = {state: LexValue(lasso_mean(play_lasso(graph, moves, state))) for state in range(graph.num_states)}
    logger.info(f"Solved lexicographic mean-payoff game with {graph.num_states} states, "
                f"value {vectors[graph.initial]} at {graph.names[graph.initial]}.")
    return LexMeanPayoffSolution(vectors, strategies[Player.PLAYER1], strategies[Player.PLAYER2])


def best_response_value(graph: GameGraph, fixed: MemorylessStrategy,
                        maximizer: Player = Player.PLAYER1) -> dict[int, LexValue]:
    """Value vectors when `fixed` is played and the opponent responds optimally."""
    restricted = graph.restrict(fixed.validate(graph).moves)
    values = lex_one_player_values(restricted, minimize=fixed.owner is maximizer)
    return {state: value.vector for state, value in values.items()}
