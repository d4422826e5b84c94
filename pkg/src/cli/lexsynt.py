import json
import logging
import signal
import sys
from argparse import SUPPRESS, ArgumentParser, Namespace as Arguments
from collections.abc import Generator, Sequence
from contextlib import contextmanager
from pathlib import Path
from types import FrameType

from cli.formats import format_gap, format_value, parse_game, parse_mealy, parse_qa, parse_value, parse_vector, \
    parse_word, serialize_mealy
from configs.solving import DEFAULT_MEMORY_CAP, WORKERS
from games.core import GameGraph, Lasso
from games.exceptions import DeadlineExceeded, GameException, UsageError
from games.lmpp import solve_lmpp
from oracle.brute_force import bounded_memory_bounds
from synthesis.automata import QuantAutomaton, eval_word, run_word
from synthesis.mealy import verify_cutoff, verify_value
from synthesis.synth import classify_realizability, synthesize

logger = logging.getLogger(__name__)


class CommandParser(ArgumentParser):
    """An ArgumentParser reporting usage problems as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


@contextmanager
def timeout(seconds: int | None) -> Generator[None, None, None]:
    """Raise a DeadlineExceeded if the wrapped block runs longer than `seconds`."""
    if not seconds:
        yield
        return

    def raise_timeout(signal_number: int, frame: FrameType | None) -> None:
        raise TimeoutError(f"Deadline of {seconds}s exceeded!")

    signal.signal(signal.SIGALRM, raise_timeout)
    signal.alarm(seconds)
    try:
        yield
    except TimeoutError as error:
        raise DeadlineExceeded(str(error)) from error
    finally:
        signal.signal(signal.SIGALRM, signal.SIG_IGN)


def parse_args(argv: Sequence[str] | None = None) -> Arguments:
    """Parse command line arguments for evaluating, verifying, solving and synthesizing."""
    parser = CommandParser(prog='lexsynt', description='Lexicographic mean-payoff games and synthesis.')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='log INFO (-v) or DEBUG (-vv) to stderr')
    parser.add_argument('--progress', action='store_true', help='show progress bars for long enumerations')
    parser.add_argument('--deadline-seconds', type=int, default=None, metavar='N', help='give up after N seconds')
    commands = parser.add_subparsers(dest='command', metavar='<command>', parser_class=CommandParser)
    commands.required = True

    evaluate = commands.add_parser('eval', help='value of an ultimately periodic word')
    evaluate.add_argument('--spec', required=True, type=Path, help='the .qa automaton')
    evaluate.add_argument('--word', required=True, help='the word, e.g. "{r} | {g} {}"')
    evaluate.add_argument('--witness', action='store_true', help='print the run as a lasso')

    verify = commands.add_parser('verify', help='worst-case value of a machine')
    verify.add_argument('--spec', required=True, type=Path, help='the .qa automaton')
    verify.add_argument('--impl', required=True, type=Path, help='the .mealy machine')
    verify.add_argument('--cutoff', default=None, help='also decide whether the value reaches this vector')
    verify.add_argument('--witness', action='store_true', help='print the worst input/output word')

    solve = commands.add_parser('solve', help='values of a game')
    solve.add_argument('--game', required=True, type=Path, help='the .game file')
    solve.add_argument('--memory-cap', type=int, default=DEFAULT_MEMORY_CAP, metavar='N')
    solve.add_argument('--jobs', type=int, default=WORKERS, metavar='N')
    solve.add_argument('--witness', action='store_true', help='print the witness strategies\' memory sizes')

    synthesis = commands.add_parser('synthesize', help='build a machine for a specification')
    synthesis.add_argument('--spec', required=True, type=Path, help='the .qa automaton')
    synthesis.add_argument('--epsilon', default=None, help='accepted distance to the value, e.g. "(1/4)"')
    synthesis.add_argument('--out', type=Path, default=None, help='write the machine to this file')
    synthesis.add_argument('--memory-cap', type=int, default=DEFAULT_MEMORY_CAP, metavar='N')
    synthesis.add_argument('--jobs', type=int, default=WORKERS, metavar='N')

    realizable = commands.add_parser('realizable', help='realizability of a cutoff')
    realizable.add_argument('--spec', required=True, type=Path, help='the .qa automaton')
    realizable.add_argument('--cutoff', required=True, help='the cutoff vector, e.g. "(1)"')
    realizable.add_argument('--memory-cap', type=int, default=DEFAULT_MEMORY_CAP, metavar='N')
    realizable.add_argument('--jobs', type=int, default=WORKERS, metavar='N')

    oracle = commands.add_parser('oracle', help=SUPPRESS)
    oracle.add_argument('--game', required=True, type=Path)
    oracle.add_argument('--memory', type=int, default=1)
    return parser.parse_args(argv)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding='utf-8')
    except OSError as error:
        raise UsageError(f"cannot read {path}") from error


def _lasso_text(names: Sequence[str], lasso: Lasso) -> str:
    prefix = [names[edge.source] for edge in lasso.prefix]
    cycle = [names[edge.source] for edge in lasso.cycle]
    return ' '.join([*prefix, '|', *cycle])


def run_eval(args: Arguments) -> list[str]:
    automaton = parse_qa(_read(args.spec))
    word = parse_word(args.word, automaton.signals)
    report = [f"value = {format_value(eval_word(automaton, word))}"]
    if args.witness:
        report.append(f"run = {_lasso_text(automaton.names, run_word(automaton, word))}")
    return report


def run_verify(args: Arguments) -> list[str]:
    automaton, machine = parse_qa(_read(args.spec)), parse_mealy(_read(args.impl))
    verification = verify_value(automaton, machine)
    report = [f"value = {format_value(verification.value)}"]
    if args.cutoff is not None:
        holds = verify_cutoff(automaton, machine, parse_value(args.cutoff), verification)
        report.append('holds' if holds else 'fails')
    if args.witness:
        report.append(f"word = {verification.word}")
    return report


def run_solve(args: Arguments) -> tuple[list[str], int]:
    game: GameGraph = parse_game(_read(args.game))
    solution = solve_lmpp(game, args.memory_cap, jobs=args.jobs, progress=args.progress)
    report = [f"value = {format_value(solution.values[game.initial])}"]
    report.extend(f"state {name} = {format_value(solution.values[state])}" for state, name in enumerate(game.names))
    uncertified = [state for state in range(game.num_states) if state not in solution.certified]
    report.extend(f"gap {game.names[state]} = {format_gap(solution.gap[state])}" for state in uncertified)
    if args.witness:
        report.append(f"memory p1 = {solution.p1_witness.size}")
        report.append(f"memory p2 = {solution.p2_witness.size}")
    return report, 3 if uncertified else 0


def run_synthesize(args: Arguments) -> list[str]:
    automaton = parse_qa(_read(args.spec))
    epsilon = None if args.epsilon is None else parse_vector(args.epsilon)
    result = synthesize(automaton, epsilon, args.memory_cap, args.jobs)
    report = [f"value = {format_value(result.value)}",
              f"optimal = {'yes' if result.optimal else 'no'}",
              f"states = {result.machine.num_states}"]
    machine_text = serialize_mealy(result.machine)
    if args.out is None:
        report.append(machine_text.rstrip('\n'))
    else:
        args.out.write_text(machine_text, encoding='utf-8')
        logger.info(f"Machine written to {args.out}.")
    return report


def run_realizable(args: Arguments) -> list[str]:
    automaton: QuantAutomaton = parse_qa(_read(args.spec))
    verdict = classify_realizability(automaton, parse_value(args.cutoff), args.memory_cap, args.jobs)
    return [verdict.verdict.value]


def run_oracle(args: Arguments) -> list[str]:
    game = parse_game(_read(args.game))
    lower, upper = bounded_memory_bounds(game, args.memory, progress=args.progress)
    report = []
    for state, name in enumerate(game.names):
        report.append(f"lower {name} = {format_value(lower[state])}")
        report.append(f"upper {name} = {format_value(upper[state])}")
    return report


def dispatch(args: Arguments) -> tuple[list[str], int]:
    match args.command:
        case 'eval':
            return run_eval(args), 0
        case 'verify':
            return run_verify(args), 0
        case 'solve':
            return run_solve(args)
        case 'synthesize':
            return run_synthesize(args), 0
        case 'realizable':
            return run_realizable(args), 0
        case 'oracle':
            return run_oracle(args), 0
    raise UsageError(f"unknown command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
        logging.basicConfig(stream=sys.stderr, level=level,
                            format='%(levelname)s %(name)s: %(message)s')
        with timeout(args.deadline_seconds):
            report, code = dispatch(args)
    except GameException as error:
        print(json.dumps(error.to_json(), sort_keys=True), file=sys.stderr)
        return error.exit_code
    print('\n'.join(report))
    return code


if __name__ == '__main__':
    sys.exit(main())
