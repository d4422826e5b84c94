import logging
from collections import deque
from collections.abc import Iterable
from typing import NamedTuple

import networkx as nx

from games.core import Edge, GameGraph, Lasso, MemorylessStrategy
from games.game_enums import Player

logger = logging.getLogger(__name__)


class Attractor(NamedTuple):
    region: frozenset[int]
    strategy: dict[int, int]


class WinningRegions(NamedTuple):
    """Partition of a parity game into winning regions with memoryless winning strategies."""
    w1: frozenset[int]
    w2: frozenset[int]
    strat1: MemorylessStrategy
    strat2: MemorylessStrategy


def attractor(graph: GameGraph, player: Player, target: Iterable[int],
              within: Iterable[int] | None = None) -> Attractor:
    """States from which `player` can force a visit to `target`, staying inside `within`.

    The strategy maps every owned attractor state outside the target to an edge that decreases
    the distance to the target.
    """
    arena = frozenset(range(graph.num_states)) if within is None else frozenset(within)
    region = set(target) & arena
    strategy: dict[int, int] = {}

    incoming: dict[int, list[Edge]] = {state: [] for state in arena}
    remaining: dict[int, int] = {state: 0 for state in arena}
    for edge in graph.edges:
        if edge.source in arena and edge.target in arena:
            incoming[edge.target].append(edge)
            remaining[edge.source] += 1

    queue = deque(sorted(region))
    while queue:
        state = queue.popleft()
        for edge in sorted(incoming[state], key=lambda edge: edge.index):
            source = edge.source
            if source in region:
                continue
            if graph.owners[source] is player:
                region.add(source)
                strategy[source] = edge.index
                queue.append(source)
            else:
                remaining[source] -= 1
                if remaining[source] == 0:
                    region.add(source)
                    queue.append(source)
    return Attractor(frozenset(region), strategy)


def _stay(graph: GameGraph, state: int, arena: frozenset[int]) -> int:
    return next(edge.index for edge in graph.out_edges[state] if edge.target in arena)


def _zielonka(graph: GameGraph, arena: frozenset[int]) -> tuple[dict[Player, frozenset], dict[Player, dict]]:
    if not arena:
        return {player: frozenset() for player in Player}, {player: {} for player in Player}

    lowest = min(graph.priority(state) for state in arena)
    alpha = Player.PLAYER1 if lowest % 2 == 0 else Player.PLAYER2
    beta = alpha.opponent
    top = frozenset(state for state in arena if graph.priority(state) == lowest)

    attracted = attractor(graph, alpha, top, within=arena)
    regions, moves = _zielonka(graph, arena - attracted.region)
    if not regions[beta]:
        kept = {state: _stay(graph, state, arena) for state in top if graph.owners[state] is alpha}
        return ({alpha: arena, beta: frozenset()},
                {alpha: moves[alpha] | attracted.strategy | kept, beta: {}})

    trapped = attractor(graph, beta, regions[beta], within=arena)
    rest_regions, rest_moves = _zielonka(graph, arena - trapped.region)
    return ({alpha: rest_regions[alpha], beta: rest_regions[beta] | trapped.region},
            {alpha: rest_moves[alpha], beta: rest_moves[beta] | moves[beta] | trapped.strategy})


def solve_parity(graph: GameGraph, states: Iterable[int] | None = None) -> WinningRegions:
    """Solve the min-parity game: Player1 wins plays whose least infinitely visited priority is even.

    Without priorities every play is won by Player1.
    """
    arena = frozenset(range(graph.num_states)) if states is None else frozenset(states)
    regions, moves = _zielonka(graph, arena)
    logger.debug(f"Parity game solved: {len(regions[Player.PLAYER1])} states won by Player1, "
                 f"{len(regions[Player.PLAYER2])} by Player2.")
    return WinningRegions(regions[Player.PLAYER1], regions[Player.PLAYER2],
                          MemorylessStrategy(Player.PLAYER1, moves[Player.PLAYER1]),
                          MemorylessStrategy(Player.PLAYER2, moves[Player.PLAYER2]))


# ----------------------------------------------------------------------------
# One-player parity

def cycles_with_min_priority(graph: GameGraph, parity: int) -> list[tuple[int, frozenset[int]]]:
    """Anchors of cycles whose least priority has the given parity.

    Every pair (state, component) names a state of priority q and the strongly connected component
    containing it among states of priority at least q; the component holds a cycle through the state.
    """
    anchors = []
    present = sorted({graph.priority(state) for state in range(graph.num_states)})
    for q in (p for p in present if p % 2 == parity):
        band = graph.digraph.subgraph(state for state in range(graph.num_states) if graph.priority(state) >= q)
        for component in nx.strongly_connected_components(band):
            for state in sorted(component):
                if graph.priority(state) == q and (len(component) > 1 or band.has_edge(state, state)):
                    anchors.append((state, frozenset(component)))
    return anchors


def cycle_through(graph: GameGraph, state: int, component: frozenset[int]) -> tuple[Edge, ...]:
    """A simple cycle through `state` that stays inside `component`."""
    first = next(edge for edge in graph.out_edges[state] if edge.target in component)
    if first.target == state:
        return (first,)
    return (first,) + graph.shortest_edges(first.target, state, within=component)


def odd_cycle_reachers(graph: GameGraph) -> frozenset[int]:
    """States from which some cycle with odd least priority is reachable."""
    reachers = set()
    for state, _ in cycles_with_min_priority(graph, parity=1):
        if state not in reachers:
            reachers |= nx.ancestors(graph.digraph, state) | {state}
    return frozenset(reachers)


def odd_lasso_exists(graph: GameGraph, source: int | None = None) -> Lasso | None:
    """A lasso from `source` whose cycle has odd least priority, or None."""
    source = graph.initial if source is None else source
    reachable = graph.reachable(source)
    for state, component in cycles_with_min_priority(graph, parity=1):
        if state in reachable:
            return Lasso(graph.shortest_edges(source, state), cycle_through(graph, state, component))
    return None
