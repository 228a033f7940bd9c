"""Line-oriented text formats for systems, machines, NFAs and traces.

System file::

    props p r e
    agent a p r
    state q0 init acc
    state q1 acc
    trans q0 {p} q0
    trans q0 {p,e} q1
    gamma q0 1          # optional transducer output

Machine files use the same ``props``/``agent``/``state``/``trans`` lines plus
an ``alphabet obs a`` header and ``output q VERDICT`` lines.  Missing machine
transitions lead to an implicit INFEASIBLE sink.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .automata import BuchiAutomaton, MooreMachine
from .errors import ParseError, RvkError
from .monitor import Verdict
from .vocab import Vocabulary

_TRANS = re.compile(r"trans\s+(\S+)\s+(\{[^}]*\})\s+(\S+)\s*\Z")


@dataclass(frozen=True)
class SystemFile:
    vocab: Vocabulary
    automaton: BuchiAutomaton
    gamma: tuple[bool, ...] | None = None


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _header(lines):
    """Consume ``props`` and ``agent`` lines; return the vocabulary and the rest."""
    props = None
    agents = []
    rest = []
    for number, line in lines:
        words = line.split()
        if words[0] == "props":
            if props is not None:
                raise ParseError("duplicate props line", line=number)
            props = words[1:]
        elif words[0] == "agent":
            if len(words) < 2:
                raise ParseError("agent line needs a name", line=number)
            agents.append((number, words[1], words[2:]))
        else:
            rest.append((number, line, words))
    if props is None:
        raise ParseError("missing props line", line=1)
    try:
        vocab = Vocabulary(tuple(props), tuple((name, obs) for _, name, obs in agents))
    except RvkError as exc:
        number = agents[0][0] if agents else 1
        raise ParseError(str(exc), line=number) from None
    return vocab, rest


def _states(rest, allowed_flags):
    names: list[str] = []
    flags: dict[str, set[str]] = {}
    others = []
    for number, line, words in rest:
        if words[0] != "state":
            others.append((number, line, words))
            continue
        if len(words) < 2:
            raise ParseError("state line needs a name", line=number)
        name = words[1]
        if name in flags:
            raise ParseError(f"duplicate state {name!r}", line=number)
        bad = set(words[2:]) - allowed_flags
        if bad:
            raise ParseError(f"unknown state flag {sorted(bad)[0]!r}", line=number)
        names.append(name)
        flags[name] = set(words[2:])
    if not names:
        raise ParseError("no states declared", line=1)
    inits = [n for n in names if "init" in flags[n]]
    if not inits:
        raise ParseError("no initial state (flag 'init')", line=1)
    if len(inits) > 1:
        raise ParseError(f"multiple initial states: {', '.join(inits)}", line=1)
    return names, flags, inits[0], others


def _resolve(ids, name, number):
    try:
        return ids[name]
    except KeyError:
        raise ParseError(f"unknown state {name!r}", line=number) from None


def _event(vocab, literal, number):
    try:
        return vocab.parse_event(literal)
    except RvkError as exc:
        raise ParseError(str(exc).split(": ", 1)[-1], line=number) from None


def parse_system_file(text: str) -> SystemFile:
    vocab, rest = _header(_lines(text))
    names, flags, init, others = _states(rest, {"init", "acc"})
    ids = {n: i for i, n in enumerate(names)}
    edges = []
    gamma: dict[int, bool] = {}
    for number, line, words in others:
        if words[0] == "trans":
            m = _TRANS.match(line)
            if m is None:
                raise ParseError("expected 'trans SRC {event} DST'", line=number)
            src, lit, dst = m.groups()
            edges.append((_resolve(ids, src, number), _event(vocab, lit, number),
                          _resolve(ids, dst, number)))
        elif words[0] == "gamma":
            if len(words) != 3 or words[2] not in ("0", "1"):
                raise ParseError("expected 'gamma STATE 0|1'", line=number)
            gamma[_resolve(ids, words[1], number)] = words[2] == "1"
        else:
            raise ParseError(f"unknown directive {words[0]!r}", line=number)
    accepting = [ids[n] for n in names if "acc" in flags[n]]
    ba = BuchiAutomaton.from_edges(vocab, len(names), ids[init], edges, accepting, names)
    out_gamma = None
    if gamma:
        if len(gamma) != len(names):
            raise ParseError("gamma section must cover every state", line=1)
        out_gamma = tuple(gamma[i] for i in range(len(names)))
    return SystemFile(vocab, ba, out_gamma)


def load_system(text: str) -> tuple[Vocabulary, BuchiAutomaton]:
    parsed = parse_system_file(text)
    return parsed.vocab, parsed.automaton


def _vocab_lines(vocab: Vocabulary) -> list[str]:
    lines = ["props " + " ".join(vocab.props)]
    for name, _ in vocab.agents:
        lines.append(" ".join(["agent", name, *vocab.observable(name)]))
    return lines


def _unique_names(names: Sequence[str]) -> list[str]:
    out = []
    seen = set()
    for i, n in enumerate(names):
        n = re.sub(r"\s+|#", "_", n) or f"q{i}"
        if n in seen:
            n = f"{n}_{i}"
        seen.add(n)
        out.append(n)
    return out


def print_system(a: BuchiAutomaton, gamma: Sequence[bool] | None = None) -> str:
    vocab = a.vocab
    names = _unique_names([a.state_name(q) for q in a.states])
    lines = _vocab_lines(vocab)
    for q in a.states:
        flags = (["init"] if q == a.initial else []) + (["acc"] if q in a.accepting else [])
        lines.append(" ".join(["state", names[q], *flags]))
    for q, letter, t in a.edges():
        lines.append(f"trans {names[q]} {vocab.format_event(letter)} {names[t]}")
    if gamma is not None:
        for q in a.states:
            lines.append(f"gamma {names[q]} {1 if gamma[q] else 0}")
    return "\n".join(lines) + "\n"


def print_machine(m: MooreMachine) -> str:
    vocab = m.vocab
    names = [f"m{q}" for q in range(m.num_states)]
    lines = _vocab_lines(vocab)
    if m.agent is not None:
        lines.append(f"alphabet obs {m.agent}")
    else:
        lines.append("alphabet full")
    for q in range(m.num_states):
        lines.append(f"state {names[q]}" + (" init" if q == m.initial else ""))
    for q in range(m.num_states):
        out = m.outputs[q]
        lines.append(f"output {names[q]} {out.value if isinstance(out, Verdict) else out}")
    for q in range(m.num_states):
        for letter in m.alphabet:
            lines.append(f"trans {names[q]} {vocab.format_event(letter)} {names[m.delta[q][letter]]}")
    return "\n".join(lines) + "\n"


def load_machine(text: str) -> MooreMachine:
    vocab, rest = _header(_lines(text))
    agent = None
    body = []
    saw_alphabet = False
    for number, line, words in rest:
        if words[0] == "alphabet":
            if words[1:2] == ["obs"] and len(words) == 3:
                agent = words[2]
                try:
                    vocab.agent_mask(agent)
                except RvkError as exc:
                    raise ParseError(str(exc), line=number) from None
            elif words[1:] != ["full"]:
                raise ParseError("expected 'alphabet obs AGENT' or 'alphabet full'", line=number)
            saw_alphabet = True
        else:
            body.append((number, line, words))
    if not saw_alphabet:
        raise ParseError("missing alphabet line", line=1)
    alphabet = vocab.obs_letters(agent) if agent is not None else vocab.letters()
    names, _, init, others = _states(body, {"init"})
    ids = {n: i for i, n in enumerate(names)}
    outputs: dict[int, Verdict] = {}
    delta: list[dict[int, int]] = [{} for _ in names]
    for number, line, words in others:
        if words[0] == "output":
            if len(words) != 3:
                raise ParseError("expected 'output STATE VERDICT'", line=number)
            try:
                outputs[_resolve(ids, words[1], number)] = Verdict(words[2])
            except ValueError:
                raise ParseError(f"unknown verdict {words[2]!r}", line=number) from None
        elif words[0] == "trans":
            m = _TRANS.match(line)
            if m is None:
                raise ParseError("expected 'trans SRC {event} DST'", line=number)
            src, lit, dst = m.groups()
            q = _resolve(ids, src, number)
            letter = _event(vocab, lit, number)
            if letter not in alphabet:
                raise ParseError(f"letter {lit} is outside the machine alphabet", line=number)
            t = _resolve(ids, dst, number)
            if delta[q].get(letter, t) != t:
                raise ParseError(f"nondeterministic transition from {src!r}", line=number)
            delta[q][letter] = t
        else:
            raise ParseError(f"unknown directive {words[0]!r}", line=number)
    missing = [n for i, n in enumerate(names) if i not in outputs]
    if missing:
        raise ParseError(f"state {missing[0]!r} has no output", line=1)
    out = [outputs[i] for i in range(len(names))]
    if any(len(row) < len(alphabet) for row in delta):
        sink = len(names)
        names.append("_infeasible")
        out.append(Verdict.INFEASIBLE)
        delta.append({})
        for row in delta:
            for letter in alphabet:
                row.setdefault(letter, sink)
    return MooreMachine(vocab, alphabet, ids[init], tuple(delta), tuple(out), tuple(names), agent)


def parse_trace(text: str, vocab: Vocabulary) -> list[int]:
    """One event literal per line."""
    return [_event(vocab, line, number) for number, line in _lines(text)]


def parse_word(text: str, vocab: Vocabulary) -> list[int]:
    """A word written as concatenated literals, e.g. ``{}{r}{p,r}``."""
    literals = re.findall(r"\{[^}]*\}", text)
    if "".join(literals).replace(" ", "") != re.sub(r"\s+", "", text):
        raise ParseError(f"malformed word {text!r}")
    return [vocab.parse_event(lit) for lit in literals]


def load_nfa(text: str):
    """``alphabet g h`` / ``state n0 init acc`` / ``trans n0 g n1`` lines."""
    from .analyses import Nfa

    alphabet = None
    names: list[str] = []
    flags = {}
    trans = []
    for number, line in _lines(text):
        words = line.split()
        if words[0] == "alphabet":
            alphabet = tuple(words[1:])
        elif words[0] == "state":
            if len(words) < 2 or words[1] in flags:
                raise ParseError("bad or duplicate state line", line=number)
            names.append(words[1])
            flags[words[1]] = set(words[2:])
        elif words[0] == "trans":
            if len(words) != 4:
                raise ParseError("expected 'trans SRC SYMBOL DST'", line=number)
            trans.append((number, words[1], words[2], words[3]))
        else:
            raise ParseError(f"unknown directive {words[0]!r}", line=number)
    if alphabet is None:
        raise ParseError("missing alphabet line", line=1)
    if not names:
        raise ParseError("no states declared", line=1)
    ids = {n: i for i, n in enumerate(names)}
    edges = set()
    for number, src, sym, dst in trans:
        if sym not in alphabet:
            raise ParseError(f"unknown symbol {sym!r}", line=number)
        edges.add((_resolve(ids, src, number), sym, _resolve(ids, dst, number)))
    return Nfa(alphabet, len(names),
               frozenset(ids[n] for n in names if "init" in flags[n]),
               frozenset(edges),
               frozenset(ids[n] for n in names if "acc" in flags[n]))
