from fractions import Fraction

import pytest
from hypothesis import given, settings

from cli.formats import parse_word
from conftest import load_mealy, load_qa, random_words
from games.core import LexValue, make_letter
from games.exceptions import AlphabetMismatch, IncompleteAutomaton
from games.lmpp import solve_lmpp
from synthesis.automata import eval_word
from synthesis.mealy import MealyMachine, spec_product, verify_cutoff, verify_value
from synthesis.synth import split_to_game

SINGLE_CLIENT_SPECS = ('A1', 'A2', 'A3', 'B', 'C', 'phi', 'phiA1')
MACHINES = ('M1', 'M2', 'M3', 'M_fig6', 'never_grant')


@pytest.mark.parametrize('spec, values', [('A1', (0, 0, Fraction(1, 2))), ('A2', (0, 1, 1))])
def test_machine_values(spec, values):
    automaton = load_qa(spec)
    found = tuple(verify_value(automaton, load_mealy(name)).value for name in ('M1', 'M2', 'M3'))
    assert found == tuple(LexValue((value,)) for value in values)


def test_granting_machine_on_composed_specification():
    assert verify_value(load_qa('C'), load_mealy('M_fig6')).value == LexValue((2,))


def test_spec_product():
    product = spec_product(load_qa('A1'), load_mealy('M3'))
    assert product.num_states == 2
    assert len(product.edges) == 4
    assert product.names == ('q0.q3', 'q0.q4')


def test_transduce():
    granting = load_mealy('M2')
    assert str(granting.transduce(parse_word('| {r} {}', ('r',)))) == '| {r,g} {-r,-g}'
    delayed = load_mealy('M3')
    assert str(delayed.transduce(parse_word('| {r}', ('r',)))) == '| {r,-g} {r,g}'
    assert str(delayed.transduce(parse_word('{} | {r} {r}', ('r',)))) == '{-r,-g} | {r,-g} {r,g}'


def test_verification_word_attains_the_value():
    for spec in ('A1', 'A2', 'C'):
        automaton = load_qa(spec)
        for name in ('M1', 'M2', 'M3'):
            verification = verify_value(automaton, load_mealy(name))
            assert eval_word(automaton, verification.word) == verification.value


def test_verify_cutoff():
    automaton, machine = load_qa('A1'), load_mealy('M3')
    assert verify_cutoff(automaton, machine, LexValue((Fraction(1, 2),)))
    assert not verify_cutoff(automaton, machine, LexValue((1,)))


def test_machine_must_be_input_enabled():
    request, nothing = make_letter(('r',), {'r'}), make_letter(('g',))
    with pytest.raises(IncompleteAutomaton):
        MealyMachine(('r',), ('g',), ['m0'], 0, {(0, request): (nothing, 0)})


def test_machine_signals_must_match():
    with pytest.raises(AlphabetMismatch):
        spec_product(load_qa('A4'), load_mealy('M1'))


def test_machine_equality():
    assert load_mealy('M2') != load_mealy('M_fig6')
    assert load_mealy('M2') == load_mealy('M2')


@given(random_words(('r',)))
@settings(max_examples=100, deadline=None, derandomize=True)
def test_machine_value_bounds_every_input_word(word):
    for spec in SINGLE_CLIENT_SPECS:
        automaton = load_qa(spec)
        for name in MACHINES:
            machine = load_mealy(name)
            assert eval_word(automaton, machine.transduce(word)) >= verify_value(automaton, machine).value


@pytest.mark.parametrize('spec', SINGLE_CLIENT_SPECS)
def test_machine_value_is_below_the_game_value(spec):
    automaton = load_qa(spec)
    game = split_to_game(automaton).game
    best = solve_lmpp(game).upper[game.initial]
    for name in MACHINES:
        assert verify_value(automaton, load_mealy(name)).value <= best


def test_verify_cutoff_reuses_a_verification():
    automaton, machine = load_qa('A2'), load_mealy('M2')
    verification = verify_value(automaton, machine)
    assert verify_cutoff(automaton, machine, LexValue((1,)), verification)
    assert not verify_cutoff(automaton, machine, LexValue((2,)), verification)
