from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cli.formats import parse_qa
from configs.utils import list_fixtures
from conftest import load_mealy, load_qa, random_automata, random_words
from games.core import Lasso, LexValue, MemorylessStrategy, lasso_mean, vector_add
from games.exceptions import EpsilonRequired, MalformedStrategy, ValidationError
from games.game_enums import Player, Verdict
from games.lmpp import evaluate_strategy, memoryless_strategies
from synthesis.automata import run_word
from synthesis.mealy import verify_value
from synthesis.synth import classify_realizability, split_to_game, strategy_to_mealy, synthesize

EPSILON = (Fraction(1, 4),)
VERDICT_RANK = {Verdict.REALIZABLE: 0, Verdict.LIMIT_ONLY: 1, Verdict.UNREALIZABLE: 2}


def test_split_sizes():
    split = split_to_game(load_qa('C'))
    game = split.game
    assert game.num_states == 7
    assert len(game.states_of(Player.PLAYER2)) == 3
    assert len(game.states_of(Player.PLAYER1)) == 4
    assert {edge.reward for edge in game.edges if game.owners[edge.source] is Player.PLAYER1} == {(4,), (2,), (0,)}
    assert {edge.reward for edge in game.edges if game.owners[edge.source] is Player.PLAYER2} == {(0,)}
    assert split_to_game(load_qa('A1')).game.num_states == 2
    assert split_to_game(load_qa('A1'), merge_inputs=False).game.num_states == 3


def test_split_keeps_priorities_on_environment_states():
    split = split_to_game(load_qa('phiA1'))
    assert split.game.priorities[:2] == (0, 1)
    assert set(split.game.priorities[2:]) == {1}


def test_machines_preserve_strategy_values():
    split = split_to_game(load_qa('C'))
    strategies = list(memoryless_strategies(split.game, Player.PLAYER1))
    assert len(strategies) == 16
    for strategy in strategies:
        machine = strategy_to_mealy(split, strategy)
        assert verify_value(split.automaton, machine).value == evaluate_strategy(split.game, strategy)[0]


def test_constant_grant_strategy():
    split = split_to_game(load_qa('C'))
    moves = {circle: next(index for index, output in split.outputs_of.items()
                          if split.game.edge(index).source == circle and output.holds('g'))
             for circle in split.game.states_of(Player.PLAYER1)}
    machine = strategy_to_mealy(split, MemorylessStrategy(Player.PLAYER1, moves))
    assert machine.num_states == 1
    assert verify_value(split.automaton, machine).value == LexValue((1,))


def test_environment_strategy_is_no_machine():
    split = split_to_game(load_qa('C'))
    with pytest.raises(MalformedStrategy):
        strategy_to_mealy(split, next(memoryless_strategies(split.game, Player.PLAYER2)))


def test_synthesize_composed_specification():
    result = synthesize(load_qa('C'))
    assert result.optimal
    assert result.value == LexValue((2,))
    assert result.machine == load_mealy('M_fig6')


def test_synthesize_arbiter_never_grants():
    result = synthesize(load_qa('A1'))
    assert result.value == LexValue((1,))
    assert result.machine.num_states == 1
    assert verify_value(load_qa('A1'), load_mealy('never_grant')).value == result.value


def test_limit_specification_needs_epsilon():
    automaton = load_qa('phiA1')
    with pytest.raises(EpsilonRequired):
        synthesize(automaton)
    result = synthesize(automaton, EPSILON)
    assert not result.optimal
    assert result.value == LexValue((1,))
    assert verify_value(automaton, result.machine).value >= LexValue((Fraction(3, 4),))


def test_pure_parity_specification():
    result = synthesize(load_qa('phi'))
    assert result.optimal
    assert result.value == LexValue(())
    assert not verify_value(load_qa('phi'), result.machine).value.is_bottom


@pytest.mark.parametrize('spec, cutoff, verdict', [
    ('C', (2,), Verdict.REALIZABLE),
    ('A1', (2,), Verdict.UNREALIZABLE),
    ('phiA1', (1,), Verdict.LIMIT_ONLY),
    ('phiA1', (Fraction(3, 4),), Verdict.REALIZABLE),
])
def test_classify_realizability(spec, cutoff, verdict):
    automaton = load_qa(spec)
    result = classify_realizability(automaton, LexValue(cutoff))
    assert result.verdict is verdict
    if verdict is Verdict.REALIZABLE:
        assert verify_value(automaton, result.machine).value >= LexValue(cutoff)
    else:
        assert result.machine is None


def test_cutoff_must_be_a_vector():
    with pytest.raises(ValidationError):
        classify_realizability(load_qa('C'), LexValue(None))


@pytest.mark.parametrize('path', list_fixtures('.qa'), ids=lambda path: path.stem)
def test_synthesized_machines_meet_their_values(path):
    automaton = parse_qa(path.read_text())
    result = synthesize(automaton, EPSILON)
    achieved = verify_value(automaton, result.machine).value
    if result.optimal:
        assert achieved == result.value
    else:
        assert achieved >= vector_add(result.value, tuple(-e for e in EPSILON))


@pytest.mark.parametrize('spec', ['C', 'phiA1'])
def test_classification_is_monotone_in_the_cutoff(spec):
    automaton = load_qa(spec)
    cutoffs = [0, Fraction(1, 2), Fraction(3, 4), 1, Fraction(5, 4), 2]
    ranks = [VERDICT_RANK[classify_realizability(automaton, LexValue((cutoff,))).verdict] for cutoff in cutoffs]
    assert ranks == sorted(ranks)


@given(random_automata(max_dim=2), st.lists(st.fractions(min_value=0, max_value=3, max_denominator=3),
                                            min_size=2, max_size=2))
@settings(max_examples=50, deadline=None, derandomize=True)
def test_no_limit_verdict_without_priorities(automaton, cutoff):
    result = classify_realizability(automaton, LexValue(cutoff[:automaton.dim]))
    assert result.verdict is not Verdict.LIMIT_ONLY
    assert (result.machine is not None) == (result.verdict is Verdict.REALIZABLE)


def _split_lasso(split, lasso: Lasso) -> Lasso:
    """The play of the split game following the automaton edges of `lasso`."""
    automaton, game = split.automaton, split.game

    def unfold(edges):
        played = []
        for edge in edges:
            letter = edge.label
            circle = split.intermediate[edge.source, letter.project(automaton.inputs)]
            output = letter.project(automaton.outputs)
            played.append(next(e for e in game.out_edges[edge.source] if e.target == circle))
            played.append(next(e for e in game.out_edges[circle] if split.outputs_of[e.index] == output))
        return tuple(played)

    return Lasso(unfold(lasso.prefix), unfold(lasso.cycle))


@given(random_automata(max_states=3, max_dim=2), random_words(('r', 'g')), st.booleans())
@settings(max_examples=100, deadline=None, derandomize=True)
def test_split_game_keeps_the_means(automaton, word, merge_inputs):
    split = split_to_game(automaton, merge_inputs)
    run = run_word(automaton, word)
    play = _split_lasso(split, run)
    assert [edge.target for edge in play.cycle[1::2]] == [edge.target for edge in run.cycle]
    assert lasso_mean(play) == lasso_mean(run)
