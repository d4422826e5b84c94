from fractions import Fraction
from multiprocessing.pool import Pool

import pytest
from hypothesis import given, settings

import games.lmpp as lmpp
from conftest import load_mealy, load_qa, one_player, random_games
from games.core import BOTTOM, GameGraph, LexValue, MemorylessStrategy
from games.exceptions import ValidationError
from games.game_enums import Player
from games.lexmp import lex_mp_solve
from games.lmpp import enumerate_strategies, epsilon_optimal_strategy, evaluate_strategy, has_memoryless_optimal, \
    single_player_max_mpp, single_player_min_mpp, solve_lmpp, strategy_count, three_phase_strategy
from games.parity import solve_parity
from oracle.brute_force import enumerate_cycles
from synthesis.mealy import spec_product

STAY = MemorylessStrategy(Player.PLAYER1, {0: 0, 1: 2})
LEAVE = MemorylessStrategy(Player.PLAYER1, {0: 1, 1: 2})


def test_single_player_max_mpp(fig5):
    assert single_player_max_mpp(fig5) == {0: LexValue((10,)), 1: LexValue((10,))}
    odd = one_player([(0, 1, (4,)), (1, 0, (4,))], 2, priorities=[1, 3])
    assert single_player_max_mpp(odd) == {0: BOTTOM, 1: BOTTOM}
    even = one_player([(0, 0, (2,)), (0, 1, (0,)), (1, 1, (7,))], 2, priorities=[0, 2])
    assert single_player_max_mpp(even)[0] == LexValue((7,))


def test_single_player_min_mpp():
    even = one_player([(0, 0, (2,)), (0, 1, (0,)), (1, 1, (7,))], 2, priorities=[0, 2], owner=Player.PLAYER2)
    assert single_player_min_mpp(even)[0] == LexValue((2,))
    never = spec_product(load_qa('phi'), load_mealy('never_grant'))
    assert single_player_min_mpp(never)[never.initial].is_bottom
    granted = spec_product(load_qa('C'), load_mealy('M_fig6'))
    assert single_player_min_mpp(granted)[granted.initial] == LexValue((2,))


def test_evaluate_memoryless(fig5):
    assert evaluate_strategy(fig5, LEAVE)[0] == LexValue((5,))
    assert evaluate_strategy(fig5, STAY)[0].is_bottom


@pytest.mark.parametrize('rounds, value', [(1, Fraction(20, 3)), (9, Fraction(100, 11)), (18, Fraction(19, 2))])
def test_three_phase_strategy(fig5, rounds, value):
    strategy = three_phase_strategy(fig5, STAY, LEAVE, {1}, rounds)
    assert strategy.size == rounds + 2
    assert evaluate_strategy(fig5, strategy)[0] == LexValue((value,))


def test_three_phase_rejects_empty_phase(fig5):
    with pytest.raises(ValidationError):
        three_phase_strategy(fig5, STAY, LEAVE, {1}, 0)


def test_three_phase_on_a_loop_through_the_target():
    graph = one_player([(0, 1, (3,)), (1, 0, (1,))], 2, priorities=[1, 0])
    strategy = MemorylessStrategy(Player.PLAYER1, {0: 0, 1: 1})
    assert evaluate_strategy(graph, three_phase_strategy(graph, strategy, strategy, {1}, 1))[0] == LexValue((2,))


def test_solve_lmpp_fig5(fig5):
    solution = solve_lmpp(fig5)
    assert solution.values[0] == LexValue((10,))
    assert solution.is_certified([0])
    assert solution.gap[0] == (0,)
    assert solution.lower[0] < solution.upper[0]
    assert solution.slack[0] != (0,)


def test_solve_lmpp_all_even_matches_lex_mp(fig6):
    even = GameGraph(fig6.names, fig6.owners, fig6.initial, fig6.edges, [0] * fig6.num_states, fig6.dim)
    solution = solve_lmpp(even)
    assert solution.values == lex_mp_solve(fig6).values
    assert solution.values[even.initial] == LexValue((2,))
    assert solution.is_certified()


@pytest.mark.parametrize('epsilon, rounds, value', [(1, 9, Fraction(100, 11)),
                                                    (Fraction(1, 2), 19, Fraction(200, 21))])
def test_epsilon_optimal_strategy(fig5, epsilon, rounds, value):
    strategy = epsilon_optimal_strategy(fig5, (epsilon,))
    assert strategy.size == rounds + 2
    assert evaluate_strategy(fig5, strategy)[0] == LexValue((value,))


def test_epsilon_must_be_positive(fig5):
    with pytest.raises(ValidationError):
        epsilon_optimal_strategy(fig5, (0,))


def test_epsilon_optimal_on_even_game_is_memoryless(fig6):
    assert epsilon_optimal_strategy(fig6, (Fraction(1, 10),)).size == 1


def test_has_memoryless_optimal(fig5, fig6):
    assert has_memoryless_optimal(fig5) is None
    even = GameGraph(fig6.names, fig6.owners, fig6.initial, fig6.edges, [0] * fig6.num_states, fig6.dim)
    strategy = has_memoryless_optimal(even)
    assert strategy.moves == {fig6.index('q1'): 2, fig6.index('q2'): 5, fig6.index('q4'): 7,
                              fig6.index('q5'): 10}


def test_strategy_enumeration(fig5):
    assert strategy_count(fig5, Player.PLAYER1, 1) == 2
    assert strategy_count(fig5, Player.PLAYER1, 2) == 64
    assert len(list(enumerate_strategies(fig5, Player.PLAYER1, 2))) == 64
    assert strategy_count(fig5, Player.PLAYER2, 2) == 16


def test_parallel_evaluation_matches_sequential(fig5):
    assert solve_lmpp(fig5, jobs=2).values == solve_lmpp(fig5).values


@given(random_games(max_states=3, max_out=2, parity=True))
@settings(max_examples=25, deadline=None, derandomize=True)
def test_witnesses_attain_the_bounds(graph):
    solution = solve_lmpp(graph, memory_cap=2, max_strategies=64)
    for state in range(graph.num_states):
        assert solution.lower[state] <= solution.values[state]
        assert evaluate_strategy(graph, solution.p1_witnesses[state])[state] == solution.lower[state]
        assert evaluate_strategy(graph, solution.p2_witnesses[state])[state] == solution.upper[state]
        if state in solution.certified:
            assert solution.gap[state] == (0,) * graph.dim


def test_three_phase_values_grow_with_the_phase_length(fig5):
    values = [evaluate_strategy(fig5, three_phase_strategy(fig5, STAY, LEAVE, {1}, rounds))[0]
              for rounds in range(1, 51)]
    assert values == [LexValue((Fraction(10 * rounds + 10, rounds + 2),)) for rounds in range(1, 51)]
    assert all(lower < higher for lower, higher in zip(values, values[1:]))
    assert values[-1] < LexValue((10,))


def test_one_pool_per_solve(fig5, monkeypatch):
    opened = []

    def counting_pool(processes):
        opened.append(processes)
        return Pool(processes)

    monkeypatch.setattr(lmpp, 'Pool', counting_pool)
    assert solve_lmpp(fig5, jobs=2).values[0] == LexValue((10,))
    assert opened == [2]
    opened.clear()
    solve_lmpp(fig5, jobs=1)
    assert not opened


@given(random_games(max_states=3, max_out=2, parity=True))
@settings(max_examples=50, deadline=None, derandomize=True)
def test_bottom_exactly_on_the_parity_losing_region(graph):
    solution = solve_lmpp(graph, memory_cap=2, max_strategies=64)
    losing = solve_parity(graph).w2
    erased = lex_mp_solve(graph.without_priorities()).values
    for state in range(graph.num_states):
        assert solution.values[state].is_bottom == (state in losing)
        assert solution.lower[state].is_bottom == (state in losing)
        assert solution.values[state] <= erased[state]


@given(random_games(max_states=5, parity=True, owners=Player.PLAYER2))
@settings(max_examples=100, deadline=None, derandomize=True)
def test_single_player_values_match_cycle_enumeration(graph):
    cycles = enumerate_cycles(graph)
    means = [LexValue(cycle.mean) for cycle in cycles]
    even = [LexValue(cycle.mean) for cycle in cycles if cycle.min_priority % 2 == 0]
    if any(cycle.min_priority % 2 for cycle in cycles):
        expected_min = BOTTOM
    else:
        expected_min = min(means)
    assert single_player_min_mpp(graph)[graph.initial] == expected_min

    best = single_player_max_mpp(graph)[graph.initial]
    if even:
        assert max(even) <= best <= max(means)
    else:
        assert best.is_bottom
