"""Exhaustive reference computations for small games.

Everything here enumerates plays, cycles and strategies directly and shares no solving code with the
game packages, so that the solvers can be checked against it.
"""
import logging
from collections.abc import Iterator, Sequence
from fractions import Fraction
from itertools import product
from typing import NamedTuple

from tqdm import tqdm

from configs.solving import ORACLE_MAX_CYCLES, ORACLE_MAX_STATES, ORACLE_MAX_STRATEGIES
from games.core import BOTTOM, Edge, GameGraph, LexValue
from games.exceptions import OracleCapExceeded
from games.game_enums import Player

logger = logging.getLogger(__name__)


class CycleRecord(NamedTuple):
    edges: tuple[Edge, ...]
    mean: tuple[Fraction, ...]
    min_priority: int | None


def _check_size(graph: GameGraph) -> None:
    if graph.num_states > ORACLE_MAX_STATES:
        raise OracleCapExceeded(f"{graph.num_states} states exceed the oracle cap of {ORACLE_MAX_STATES}")


def _mean(rewards: Sequence[tuple[int, ...]], dim: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(sum(reward[i] for reward in rewards), len(rewards)) for i in range(dim))


def _reach(out_edges: Sequence[Sequence[Edge]], source: int) -> set[int]:
    seen = {source}
    stack = [source]
    while stack:
        for edge in out_edges[stack.pop()]:
            if edge.target not in seen:
                seen.add(edge.target)
                stack.append(edge.target)
    return seen


def _simple_cycles(out_edges: Sequence[Sequence[Edge]], allowed: set[int]) -> list[tuple[Edge, ...]]:
    """Every simple cycle inside `allowed`, listed once from its least state."""
    cycles = []

    def extend(start: int, state: int, path: list[Edge], visited: set[int]) -> None:
        for edge in out_edges[state]:
            if edge.target not in allowed or edge.target < start:
                continue
            if edge.target == start:
                cycles.append(tuple(path + [edge]))
                if len(cycles) > ORACLE_MAX_CYCLES:
                    raise OracleCapExceeded(f"more than {ORACLE_MAX_CYCLES} simple cycles")
            elif edge.target not in visited:
                extend(start, edge.target, path + [edge], visited | {edge.target})

    for start in sorted(allowed):
        extend(start, start, [], {start})
    return cycles


def _record(cycle: tuple[Edge, ...], priorities: Sequence[int] | None, dim: int) -> CycleRecord:
    lowest = None if priorities is None else min(priorities[edge.source] for edge in cycle)
    return CycleRecord(cycle, _mean([edge.reward for edge in cycle], dim), lowest)


def enumerate_cycles(graph: GameGraph) -> list[CycleRecord]:
    """All simple cycles reachable from the initial state with their means and least priorities."""
    _check_size(graph)
    out_edges = [list(edges) for edges in graph.out_edges]
    reachable = _reach(out_edges, graph.initial)
    return [_record(cycle, graph.priorities, graph.dim) for cycle in _simple_cycles(out_edges, reachable)]


# ----------------------------------------------------------------------------
# Memoryless games

def _choices(graph: GameGraph, player: Player) -> list[dict[int, Edge]]:
    owned = [state for state in range(graph.num_states) if graph.owners[state] is player]
    options = [graph.out_edges[state] for state in owned]
    return [dict(zip(owned, picks)) for picks in product(*options)]


def _follow(graph: GameGraph, moves: dict[int, Edge], start: int) -> tuple[Fraction, ...]:
    order = {}
    path = []
    state = start
    while state not in order:
        order[state] = len(path)
        path.append(moves[state])
        state = moves[state].target
    return _mean([edge.reward for edge in path[order[state]:]], graph.dim)


def enumerate_memoryless_game_value(graph: GameGraph) -> dict[int, LexValue]:
    """Max over Player1 of min over Player2 memoryless strategies of the mean payoff of the resulting play."""
    _check_size(graph)
    first, second = _choices(graph, Player.PLAYER1), _choices(graph, Player.PLAYER2)
    if len(first) * len(second) > ORACLE_MAX_STRATEGIES:
        raise OracleCapExceeded(f"{len(first) * len(second)} strategy pairs exceed the oracle cap")
    values = {}
    for state in range(graph.num_states):
        values[state] = LexValue(max(min(_follow(graph, p1 | p2, state) for p2 in second) for p1 in first))
    return values


# ----------------------------------------------------------------------------
# Bounded-memory strategies

class _Product(NamedTuple):
    out_edges: list[list[Edge]]
    priorities: list[int] | None
    size: int


def _product(graph: GameGraph, owner: Player, size: int, update: Sequence[Sequence[int]],
             moves: Sequence[dict[int, Edge]]) -> _Product:
    out_edges = [[] for _ in range(graph.num_states * size)]
    for state in range(graph.num_states):
        for memory in range(size):
            source = state * size + memory
            edges = [moves[memory][state]] if graph.owners[state] is owner else graph.out_edges[state]
            for edge in edges:
                target = edge.target * size + update[memory][edge.target]
                out_edges[source].append(Edge(len(out_edges[source]), source, target, edge.reward))
    priorities = None if graph.priorities is None else \
        [graph.priorities[state] for state in range(graph.num_states) for _ in range(size)]
    return _Product(out_edges, priorities, size)


def _closed_cycles(joint: _Product, dim: int) -> list[CycleRecord]:
    everything = set(range(len(joint.out_edges)))
    return [_record(cycle, joint.priorities, dim) for cycle in _simple_cycles(joint.out_edges, everything)]


def _minimizing_response(joint: _Product, cycles: list[CycleRecord], start: int) -> LexValue:
    reachable = _reach(joint.out_edges, start)
    inside = [cycle for cycle in cycles if cycle.edges[0].source in reachable]
    if any(cycle.min_priority is not None and cycle.min_priority % 2 for cycle in inside):
        return BOTTOM
    return LexValue(min(cycle.mean for cycle in inside))


def _maximizing_response(joint: _Product, cycles: list[CycleRecord], start: int) -> LexValue:
    """Best payoff the opponent can approach: pump any cycle sharing a component with an even-priority cycle."""
    reachable = _reach(joint.out_edges, start)
    inside = [cycle for cycle in cycles if cycle.edges[0].source in reachable]
    best = BOTTOM
    for anchor in inside:
        if anchor.min_priority is not None and anchor.min_priority % 2:
            continue
        floor = anchor.min_priority or 0
        band = {state for state in reachable if joint.priorities is None or joint.priorities[state] >= floor}
        restricted = [[edge for edge in edges if edge.target in band] for edges in joint.out_edges]
        root = anchor.edges[0].source
        forward = _reach(restricted, root) & band
        component = {state for state in forward if root in _reach(restricted, state)}
        for cycle in inside:
            if all(edge.source in component for edge in cycle.edges):
                candidate = LexValue(cycle.mean)
                if candidate > best:
                    best = candidate
    return best


def _bounded_strategies(graph: GameGraph, player: Player, size: int) -> Iterator[tuple[tuple, tuple]]:
    owned = [state for state in range(graph.num_states) if graph.owners[state] is player]
    n = graph.num_states
    for table in product(range(size), repeat=size * n):
        update = tuple(table[m * n:(m + 1) * n] for m in range(size))
        for picks in product(*[graph.out_edges[state] for state in owned] * size):
            yield update, tuple(dict(zip(owned, picks[m * len(owned):(m + 1) * len(owned)])) for m in range(size))


def _bounded_count(graph: GameGraph, player: Player, size: int) -> int:
    count = size ** (size * graph.num_states)
    for state in range(graph.num_states):
        if graph.owners[state] is player:
            count *= len(graph.out_edges[state]) ** size
    return count


def bounded_memory_bounds(graph: GameGraph, memory: int,
                          progress: bool = False) -> tuple[dict[int, LexValue], dict[int, LexValue]]:
    """Best values Player1 guarantees and Player2 enforces with strategies of exactly `memory` memory states.

    The true game value lies between the two maps.
    """
    _check_size(graph)
    n = graph.num_states
    bounds = {}
    for player, respond, pick in ((Player.PLAYER1, _minimizing_response, max),
                                  (Player.PLAYER2, _maximizing_response, min)):
        count = _bounded_count(graph, player, memory)
        if count > ORACLE_MAX_STRATEGIES:
            raise OracleCapExceeded(f"{count} strategies exceed the oracle cap of {ORACLE_MAX_STRATEGIES}")
        best: dict[int, LexValue | None] = {state: None for state in range(n)}
        for update, moves in tqdm(_bounded_strategies(graph, player, memory), total=count,
                                  desc=f"oracle {player.value}", disable=not progress, leave=False):
            joint = _product(graph, player, memory, update, moves)
            cycles = _closed_cycles(joint, graph.dim)
            for state in range(n):
                value = respond(joint, cycles, state * memory)
                best[state] = value if best[state] is None else pick(best[state], value)
        bounds[player] = best
    logger.debug(f"Oracle bounds computed for memory {memory}.")
    return bounds[Player.PLAYER1], bounds[Player.PLAYER2]
