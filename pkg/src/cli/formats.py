"""Line-oriented text formats for automata (.qa), games (.game), machines (.mealy) and words."""
import re
from collections.abc import Sequence
from fractions import Fraction
from itertools import product
from typing import NamedTuple

from games.core import Edge, GameGraph, Letter, LexValue, all_letters, format_vector
from games.exceptions import DimensionMismatch, NondeterministicLabeling, ParseError
from games.game_enums import Player
from synthesis.automata import QuantAutomaton, Word
from synthesis.mealy import MealyMachine

TOKEN = re.compile(r"\{[^}]*}?|\([^)]*\)?|->|\||[^\s{}()|]+")
NAME = re.compile(r"[^\s{}()|#,*-][^\s{}()|#,]*")
VERSION = 'v1'


class Token(NamedTuple):
    text: str
    column: int


class Line(NamedTuple):
    number: int
    tokens: list[Token]


class StateDecl(NamedTuple):
    name: str
    owner: Player
    initial: bool
    priority: int | None
    line: int


def tokenize(text: str) -> list[Line]:
    """Split text into lines of tokens, dropping comments and blank lines."""
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0]
        tokens = [Token(match.group(), match.start() + 1) for match in TOKEN.finditer(content)]
        if tokens:
            lines.append(Line(number, tokens))
    return lines


def _fail(message: str, line: int, token: Token | None = None) -> ParseError:
    return ParseError(message, line, token.column if token else 1)


def _integer(token: Token, line: int) -> int:
    if not token.text.isdigit():
        raise _fail(f"expected a natural number, got {token.text}", line, token)
    return int(token.text)


def _name(token: Token, line: int) -> str:
    if not NAME.fullmatch(token.text):
        raise _fail(f"invalid name {token.text}", line, token)
    return token.text


def _bracketed(token: Token, line: int, opening: str, closing: str) -> str:
    if not token.text.startswith(opening) or not token.text.endswith(closing) or len(token.text) < 2:
        raise _fail(f"expected {opening}...{closing}, got {token.text}", line, token)
    return token.text[1:-1].strip()


def parse_letters(token: Token, signals: Sequence[str], line: int = 1, concrete: bool = False) -> list[Letter]:
    """Expand a letter pattern like {r,-g}, {*r} or {r,*} into the letters it denotes.

    Unmentioned signals are false unless a bare * makes them wildcards.
    """
    body = _bracketed(token, line, '{', '}')
    assigned: dict[str, bool | None] = {}
    rest_free = False
    for entry in (part.strip() for part in body.split(',')) if body else ():
        if entry == '*':
            rest_free = True
            continue
        polarity = {'*': None, '-': False}.get(entry[:1], True)
        signal = entry if polarity is True else entry[1:]
        if signal not in signals:
            raise _fail(f"unknown signal {signal}", line, token)
        if signal in assigned:
            raise _fail(f"signal {signal} assigned twice", line, token)
        assigned[signal] = polarity
    options = [[assigned[signal]] if assigned.get(signal) is not None
               else [True, False] if signal in assigned or rest_free else [False]
               for signal in signals]
    if concrete and any(len(option) > 1 for option in options):
        raise _fail(f"letter {token.text} must not contain wildcards", line, token)
    return [Letter(tuple(signals), frozenset(s for s, value in zip(signals, values) if value))
            for values in product(*options)]


def parse_vector(text: str, line: int = 1, column: int = 1) -> tuple[Fraction, ...]:
    """Parse "(1,1/2)", "(2)" or a bare rational like "1/2"."""
    body = text.strip()
    if body.startswith('('):
        body = _bracketed(Token(body, column), line, '(', ')')
    try:
        return tuple(Fraction(part.strip()) for part in body.split(',')) if body else ()
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"invalid rational vector {text}", line, column) from None


def parse_value(text: str) -> LexValue:
    return LexValue(parse_vector(text))


def _reward(token: Token, line: int, dim: int) -> tuple[int, ...]:
    body = _bracketed(token, line, '(', ')')
    parts = [part.strip() for part in body.split(',')] if body else []
    if any(not part.isdigit() for part in parts):
        raise _fail(f"rewards must be natural numbers, got {token.text}", line, token)
    if len(parts) != dim:
        raise DimensionMismatch(f"line {line}, column {token.column}: reward {token.text} has {len(parts)} "
                                f"components, expected {dim}")
    return tuple(int(part) for part in parts)


# ----------------------------------------------------------------------------
# Documents

class _Document:
    """Header fields, state declarations and body lines shared by all three formats."""

    def __init__(self, text: str, kind: str, headers: Sequence[str]):
        lines = tokenize(text)
        if not lines or [token.text for token in lines[0].tokens] != [kind, VERSION]:
            raise ParseError(f"expected header '{kind} {VERSION}'", lines[0].number if lines else 1, 1)
        self.kind = kind
        self.fields: dict[str, list[Token]] = {}
        self.states: dict[str, StateDecl] = {}
        self.body: list[Line] = []
        self._state_lines: list[Line] = []
        self._field_lines: dict[str, int] = {}
        for line in lines[1:]:
            keyword = line.tokens[0]
            if keyword.text in headers:
                if keyword.text in self.fields:
                    raise _fail(f"duplicate header {keyword.text}", line.number, keyword)
                self.fields[keyword.text] = line.tokens[1:]
                self._field_lines[keyword.text] = line.number
            elif keyword.text == 'state':
                self._state_lines.append(line)
            else:
                self.body.append(line)

    def names(self, field: str, required: bool = True) -> tuple[str, ...]:
        if field not in self.fields:
            if required:
                raise ParseError(f"missing header {field}", 1, 1)
            return ()
        line = self._field_lines[field]
        return tuple(_name(token, line) for token in self.fields[field])

    def number(self, field: str) -> int:
        if field not in self.fields or len(self.fields[field]) != 1:
            raise ParseError(f"header {field} needs exactly one value", self._field_lines.get(field, 1), 1)
        return _integer(self.fields[field][0], self._field_lines[field])

    def switch(self, field: str) -> bool:
        if field not in self.fields or [token.text for token in self.fields[field]] not in (['on'], ['off']):
            raise ParseError(f"header {field} must be 'on' or 'off'", self._field_lines.get(field, 1), 1)
        return self.fields[field][0].text == 'on'

    def declare_states(self, with_owner: bool, parity: bool | None) -> list[StateDecl]:
        """Read the state lines: `state <id> [p1|p2] [init] [prio <n>]`."""
        for line in self._state_lines:
            tokens = line.tokens[1:]
            if not tokens:
                raise _fail('state needs a name', line.number, line.tokens[0])
            name = _name(tokens[0], line.number)
            if name in self.states:
                raise _fail(f"duplicate state {name}", line.number, tokens[0])
            rest = tokens[1:]
            owner = Player.PLAYER1
            if with_owner:
                if not rest or rest[0].text not in ('p1', 'p2'):
                    raise _fail('state owner must be p1 or p2', line.number, rest[0] if rest else tokens[0])
                owner, rest = Player(rest[0].text), rest[1:]
            initial = bool(rest) and rest[0].text == 'init'
            rest = rest[1:] if initial else rest
            priority = None
            if rest and rest[0].text == 'prio':
                if not parity:
                    raise _fail('priorities need parity on', line.number, rest[0])
                if len(rest) < 2:
                    raise _fail('prio needs a value', line.number, rest[0])
                priority, rest = _integer(rest[1], line.number), rest[2:]
            if rest:
                raise _fail(f"unexpected {rest[0].text}", line.number, rest[0])
            if parity and priority is None:
                raise _fail(f"state {name} needs a priority", line.number, tokens[0])
            self.states[name] = StateDecl(name, owner, initial, priority, line.number)

        if not self.states:
            raise ParseError('no states declared', 1, 1)
        initial = [state for state in self.states.values() if state.initial]
        if len(initial) != 1:
            raise ParseError(f"expected exactly one initial state, found {len(initial)}",
                             initial[1].line if len(initial) > 1 else 1, 1)
        return list(self.states.values())

    def state_index(self, token: Token, line: int) -> int:
        if token.text not in self.states:
            raise _fail(f"unknown state {token.text}", line, token)
        return list(self.states).index(token.text)

    @property
    def initial(self) -> int:
        return next(i for i, state in enumerate(self.states.values()) if state.initial)

    @property
    def priorities(self) -> list[int] | None:
        priorities = [state.priority for state in self.states.values()]
        return None if None in priorities else priorities


def _edge_lines(document: _Document, keyword: str) -> list[Line]:
    for line in document.body:
        if line.tokens[0].text != keyword:
            raise _fail(f"unknown statement {line.tokens[0].text}", line.number, line.tokens[0])
    return document.body


def _check_letter(seen: dict[tuple[int, Letter], int], key: tuple[int, Letter], line: Line, name: str) -> None:
    if key in seen:
        raise NondeterministicLabeling(f"line {line.number}, column {line.tokens[0].column}: duplicate letter "
                                       f"{key[1]} on state {name}")
    seen[key] = line.number


def parse_qa(text: str) -> QuantAutomaton:
    """Parse a quantitative automaton; completeness and determinism are checked."""
    document = _Document(text, 'qa', ('inputs', 'outputs', 'dim', 'parity'))
    inputs, outputs = document.names('inputs'), document.names('outputs')
    dim, parity = document.number('dim'), document.switch('parity')
    states = document.declare_states(with_owner=False, parity=parity)
    signals = inputs + outputs

    transitions, seen = [], {}
    for line in _edge_lines(document, 'edge'):
        tokens = line.tokens[1:]
        if len(tokens) != 4:
            raise _fail('expected: edge <src> <dst> {<letter>} (<reward>)', line.number, line.tokens[0])
        source, target = document.state_index(tokens[0], line.number), document.state_index(tokens[1], line.number)
        reward = _reward(tokens[3], line.number, dim)
        for letter in parse_letters(tokens[2], signals, line.number):
            _check_letter(seen, (source, letter), line, states[source].name)
            transitions.append((source, target, letter, reward))
    return QuantAutomaton.from_transitions(inputs, outputs, [state.name for state in states], document.initial,
                                           transitions, document.priorities if parity else None, dim)


def parse_game(text: str) -> GameGraph:
    """Parse a game graph; letters on edges are optional and range over the declared signals."""
    document = _Document(text, 'game', ('dim', 'parity', 'signals'))
    dim, parity = document.number('dim'), document.switch('parity')
    signals = document.names('signals', required=False)
    states = document.declare_states(with_owner=True, parity=parity)

    edges, seen = [], {}
    for line in _edge_lines(document, 'edge'):
        tokens = line.tokens[1:]
        if len(tokens) not in (3, 4):
            raise _fail('expected: edge <src> <dst> [{<letter>}] (<reward>)', line.number, line.tokens[0])
        source, target = document.state_index(tokens[0], line.number), document.state_index(tokens[1], line.number)
        reward = _reward(tokens[-1], line.number, dim)
        letters = parse_letters(tokens[2], signals, line.number) if len(tokens) == 4 else [None]
        for letter in letters:
            if letter is not None:
                _check_letter(seen, (source, letter), line, states[source].name)
            edges.append(Edge(len(edges), source, target, reward, letter))
    return GameGraph([state.name for state in states], [state.owner for state in states], document.initial,
                     edges, document.priorities if parity else None, dim)


def parse_mealy(text: str) -> MealyMachine:
    """Parse a Mealy machine; input letters may use wildcards, outputs must be concrete."""
    document = _Document(text, 'mealy', ('inputs', 'outputs'))
    inputs, outputs = document.names('inputs'), document.names('outputs')
    states = document.declare_states(with_owner=False, parity=False)

    transitions = {}
    for line in _edge_lines(document, 'trans'):
        tokens = line.tokens[1:]
        if len(tokens) != 5 or tokens[2].text != '->':
            raise _fail('expected: trans <src> {<in>} -> {<out>} <dst>', line.number, line.tokens[0])
        source, target = document.state_index(tokens[0], line.number), document.state_index(tokens[4], line.number)
        output, = parse_letters(tokens[3], outputs, line.number, concrete=True)
        for letter in parse_letters(tokens[1], inputs, line.number):
            if (source, letter) in transitions:
                raise NondeterministicLabeling(f"line {line.number}, column {tokens[1].column}: duplicate input "
                                               f"{letter} on state {states[source].name}")
            transitions[source, letter] = (output, target)
    return MealyMachine(inputs, outputs, [state.name for state in states], document.initial, transitions)


def parse_word(text: str, signals: Sequence[str]) -> Word:
    """Parse "p1 p2 | c1 c2": total letters before and after the bar, the part after it repeating."""
    tokens = [token for line in tokenize(text) for token in line.tokens]
    bars = [i for i, token in enumerate(tokens) if token.text == '|']
    if len(bars) != 1:
        raise ParseError('a word needs exactly one | between prefix and cycle', 1, tokens[0].column if tokens else 1)
    prefix, cycle = tokens[:bars[0]], tokens[bars[0] + 1:]
    if not cycle:
        raise ParseError('the cycle of a word must not be empty', 1, tokens[bars[0]].column)
    letters = [parse_letters(token, signals, concrete=True)[0] for token in prefix + cycle]
    return Word(tuple(letters[:len(prefix)]), tuple(letters[len(prefix):]))


# ----------------------------------------------------------------------------
# Serialization

def _reward_text(reward: Sequence[int]) -> str:
    return '(' + ','.join(map(str, reward)) + ')'


def _state_line(graph: GameGraph, state: int, with_owner: bool) -> str:
    parts = ['state', graph.names[state]]
    if with_owner:
        parts.append(graph.owners[state].value)
    if state == graph.initial:
        parts.append('init')
    if graph.has_priorities:
        parts.extend(['prio', str(graph.priorities[state])])
    return ' '.join(parts)


def _header(*parts: str) -> str:
    return ' '.join(part for part in parts if part)


def serialize_qa(automaton: QuantAutomaton) -> str:
    graph = automaton.graph
    lines = ['qa v1', _header('inputs', *automaton.inputs), _header('outputs', *automaton.outputs),
             f"dim {automaton.dim}", f"parity {'on' if automaton.has_priorities else 'off'}"]
    lines.extend(_state_line(graph, state, with_owner=False) for state in range(graph.num_states))
    lines.extend(f"edge {graph.names[edge.source]} {graph.names[edge.target]} {edge.label} {_reward_text(edge.reward)}"
                 for edge in graph.edges)
    return '\n'.join(lines) + '\n'


def serialize_game(graph: GameGraph) -> str:
    signals = []
    for edge in graph.edges:
        if edge.label is not None:
            signals.extend(signal for signal in edge.label.signals if signal not in signals)
    lines = ['game v1', f"dim {graph.dim}", f"parity {'on' if graph.has_priorities else 'off'}"]
    if signals:
        lines.append(_header('signals', *signals))
    lines.extend(_state_line(graph, state, with_owner=True) for state in range(graph.num_states))
    for edge in graph.edges:
        label = '' if edge.label is None else f" {edge.label.project(signals)}"
        lines.append(f"edge {graph.names[edge.source]} {graph.names[edge.target]}{label} {_reward_text(edge.reward)}")
    return '\n'.join(lines) + '\n'


def serialize_mealy(machine: MealyMachine) -> str:
    lines = ['mealy v1', _header('inputs', *machine.inputs), _header('outputs', *machine.outputs)]
    lines.extend(f"state {name}{' init' if state == machine.initial else ''}"
                 for state, name in enumerate(machine.names))
    for state in range(machine.num_states):
        for letter in all_letters(machine.inputs):
            output, target = machine.step(state, letter)
            lines.append(f"trans {machine.names[state]} {letter} -> {output} {machine.names[target]}")
    return '\n'.join(lines) + '\n'


def format_value(value: LexValue) -> str:
    return str(value)


def format_gap(gap: Sequence[Fraction] | None) -> str:
    return 'inf' if gap is None else format_vector(gap)
