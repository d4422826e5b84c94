import json
from fractions import Fraction

import pytest

import cli.lexsynt as lexsynt
from cli.formats import parse_mealy
from cli.lexsynt import main
from configs.utils import get_fixture_path
from conftest import load_mealy
from games.core import LexValue
from synthesis.mealy import verify_cutoff


def _run(capsys, *argv: str) -> tuple[int, list[str], str]:
    code = main([str(arg) for arg in argv])
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


def _report(err: str) -> dict:
    return json.loads(err.strip().splitlines()[-1])


@pytest.mark.parametrize('word, value', [('| {r} {g} {g}', '(2/3)'), ('| {r} {g} {}', '(1)')])
def test_eval(capsys, word, value):
    code, out, _ = _run(capsys, 'eval', '--spec', get_fixture_path('A2.qa'), '--word', word)
    assert code == 0
    assert out == [f"value = {value}"]


def test_eval_witness(capsys):
    code, out, _ = _run(capsys, '--deadline-seconds', '60', 'eval', '--spec', get_fixture_path('A1.qa'),
                        '--word', '| {r,g} {}', '--witness')
    assert code == 0
    assert out == ['value = (1/2)', 'run = | q0 q0']


def test_verify(capsys):
    code, out, _ = _run(capsys, 'verify', '--spec', get_fixture_path('C.qa'),
                        '--impl', get_fixture_path('M_fig6.mealy'), '--cutoff', '(2)', '--witness')
    assert code == 0
    assert out[:2] == ['value = (2)', 'holds']
    assert out[2].startswith('word = ')


def test_verify_failing_cutoff(capsys):
    code, out, _ = _run(capsys, 'verify', '--spec', get_fixture_path('A1.qa'), '--impl', get_fixture_path('M1.mealy'),
                        '--cutoff', '(1/2)')
    assert code == 0
    assert out == ['value = (0)', 'fails']


@pytest.mark.parametrize('cutoff, verdict', [('(1)', 'limit-only'), ('(3/4)', 'realizable'), ('(2)', 'unrealizable')])
def test_realizable(capsys, cutoff, verdict):
    code, out, _ = _run(capsys, 'realizable', '--spec', get_fixture_path('phiA1.qa'), '--cutoff', cutoff)
    assert code == 0
    assert out == [verdict]


def test_solve(capsys):
    code, out, _ = _run(capsys, 'solve', '--game', get_fixture_path('fig5.game'), '--witness')
    assert code == 0
    assert out[0] == 'value = (10)'
    assert 'state s1 = (10)' in out
    assert not any(line.startswith('gap') for line in out)
    assert out[-2].startswith('memory p1 = ')


def test_synthesize(capsys):
    code, out, _ = _run(capsys, 'synthesize', '--spec', get_fixture_path('C.qa'))
    assert code == 0
    assert out[:3] == ['value = (2)', 'optimal = yes', 'states = 1']
    assert parse_mealy('\n'.join(out[3:])) == load_mealy('M_fig6')


def test_synthesize_to_file(capsys, tmp_path):
    target = tmp_path / 'machine.mealy'
    code, out, _ = _run(capsys, 'synthesize', '--spec', get_fixture_path('phiA1.qa'), '--epsilon', '(1/4)',
                        '--out', target)
    assert code == 0
    assert out == ['value = (1)', 'optimal = no', f"states = {parse_mealy(target.read_text()).num_states}"]


def test_epsilon_required(capsys):
    code, out, err = _run(capsys, 'synthesize', '--spec', get_fixture_path('phiA1.qa'))
    assert code == 2
    assert not out
    assert _report(err)['type'] == 'EpsilonRequired'


def test_usage_errors(capsys):
    code, _, err = _run(capsys)
    assert code == 1
    assert _report(err)['type'] == 'UsageError'
    code, _, err = _run(capsys, 'eval', '--spec', 'missing.qa', '--word', '| {}')
    assert code == 1
    assert _report(err)['type'] == 'UsageError'


def test_parse_errors(capsys, tmp_path):
    broken = tmp_path / 'broken.qa'
    broken.write_text('qa v1\ninputs r\noutputs g\ndim 1\nparity off\nstate q0 init\nedge q0 q9 {*} (1)\n')
    code, _, err = _run(capsys, 'eval', '--spec', broken, '--word', '| {}')
    assert code == 1
    report = _report(err)
    assert (report['type'], report['line'], report['column']) == ('ParseError', 7, 9)


def test_oracle(capsys):
    code, out, _ = _run(capsys, 'oracle', '--game', get_fixture_path('fig5.game'), '--memory', '1')
    assert code == 0
    assert 'lower s0 = (5)' in out
    assert 'upper s0 = (10)' in out


def test_verify_decides_the_cutoff_with_the_computed_value(capsys, monkeypatch):
    calls = []

    def recording_cutoff(automaton, machine, cutoff, verification=None):
        calls.append((cutoff, verification))
        return verify_cutoff(automaton, machine, cutoff, verification)

    monkeypatch.setattr(lexsynt, 'verify_cutoff', recording_cutoff)
    code, out, _ = _run(capsys, 'verify', '--spec', get_fixture_path('A1.qa'), '--impl', get_fixture_path('M3.mealy'),
                        '--cutoff', '(1/2)')
    assert code == 0
    assert out == ['value = (1/2)', 'holds']
    assert len(calls) == 1
    cutoff, verification = calls[0]
    assert cutoff == LexValue((Fraction(1, 2),)) and verification.value == cutoff
