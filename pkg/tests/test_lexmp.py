from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings

import games.lexmp as lexmp
from conftest import one_player, random_games, random_one_player_graphs
from games.core import LexValue, MemorylessStrategy, lasso_mean
from games.exceptions import ResourceCapExceeded
from games.game_enums import Mode, Player
from games.lexmp import best_response_value, compute_multipliers, extreme_mean_cycle, lex_mp_solve, mp_value, \
    scalarize
from oracle.brute_force import enumerate_cycles


def test_multipliers():
    graph = one_player([(0, 1, (0, 3)), (1, 0, (1, 1))], 2)
    assert compute_multipliers(graph) == (13, 1)
    assert scalarize(graph).weights == {0: 3, 1: 14}
    single = one_player([(0, 0, (4,)), (0, 0, (2,))], 1)
    assert scalarize(single).weights == {0: 4, 1: 2}


def test_extreme_mean_cycle():
    loop = one_player([(0, 0, (5,))], 1)
    assert extreme_mean_cycle(loop, Mode.MIN)[0] == 5
    two_loops = one_player([(0, 0, (2,)), (0, 1, (0,)), (1, 1, (7,))], 2)
    low, witness = extreme_mean_cycle(two_loops, Mode.MIN)
    high, lasso = extreme_mean_cycle(two_loops, Mode.MAX)
    assert (low, high) == (2, 7)
    assert lasso_mean(witness) == (2,)
    assert [edge.index for edge in lasso.prefix] == [1] and lasso_mean(lasso) == (7,)


@given(random_one_player_graphs())
@settings(max_examples=100, deadline=None, derandomize=True)
def test_extreme_mean_cycle_matches_cycle_enumeration(graph):
    means = [LexValue(cycle.mean) for cycle in enumerate_cycles(graph)]
    for mode, pick in ((Mode.MIN, min), (Mode.MAX, max)):
        _, lasso = extreme_mean_cycle(graph, mode)
        lasso.validate()
        assert lasso.start == graph.initial
        assert LexValue(lasso_mean(lasso)) == pick(means)


@given(random_one_player_graphs(max_states=5))
@settings(max_examples=100, deadline=None, derandomize=True)
def test_scalarization_preserves_cycle_order(graph):
    weights = scalarize(graph).weights
    cycles = enumerate_cycles(graph)
    for first, second in combinations(cycles, 2):
        scalar = [Fraction(sum(weights[edge.index] for edge in cycle.edges), len(cycle.edges))
                  for cycle in (first, second)]
        lexicographic = LexValue(first.mean), LexValue(second.mean)
        assert (scalar[0] < scalar[1]) == (lexicographic[0] < lexicographic[1])
        assert (scalar[0] == scalar[1]) == (lexicographic[0] == lexicographic[1])


def test_mp_value_fig6(fig6):
    values = mp_value(scalarize(fig6))
    assert values[fig6.index('q0')] == 2
    assert values[fig6.index('q5')] == 0


def test_mp_value_single_loop():
    loop = one_player([(0, 1, (7,)), (1, 0, (7,))], 2)
    assert mp_value(scalarize(loop)) == {0: 7, 1: 7}


def test_lex_mp_solve_fig6(fig6):
    solution = lex_mp_solve(fig6)
    assert solution.values[fig6.initial] == LexValue((2,))
    moves = solution.p1_strategy.moves
    assert fig6.edge(moves[fig6.index('q1')]).label.holds('g')
    assert not fig6.edge(moves[fig6.index('q2')]).label.holds('g')
    assert fig6.edge(moves[fig6.index('q4')]).target == fig6.index('q0')


def test_lex_mp_solve_prefers_lexicographically_larger_loop():
    graph = one_player([(0, 0, (1, 0)), (0, 1, (0, 0)), (1, 1, (1, 1))], 2)
    assert lex_mp_solve(graph).values[0] == LexValue((1, 1))


def test_value_iteration_cap(monkeypatch):
    monkeypatch.setattr(lexmp, 'MAX_VALUE_ITERATION_STEPS', 10)
    with pytest.raises(ResourceCapExceeded):
        mp_value(scalarize(one_player([(0, 1, (3,)), (1, 0, (1,))], 2)))


def test_best_response_value(fig6):
    solution = lex_mp_solve(fig6)
    assert best_response_value(fig6, solution.p1_strategy)[fig6.initial] == LexValue((2,))
    loop = one_player([(0, 0, (3, 1))], 1)
    assert best_response_value(loop, MemorylessStrategy(Player.PLAYER1, {0: 0}))[0] == LexValue((3, 1))


@given(random_games())
@settings(max_examples=100, deadline=None, derandomize=True)
def test_optimal_strategies_attain_the_values(graph):
    solution = lex_mp_solve(graph)
    assert best_response_value(graph, solution.p1_strategy) == solution.values
    assert best_response_value(graph, solution.p2_strategy) == solution.values
