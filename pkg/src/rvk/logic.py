"""Epistemic LTL with past: syntax tree, concrete syntax and desugaring.

The core connectives are propositions, negation, conjunction, strict until,
strict since and knowledge.  Everything else is sugar that ``desugar``
rewrites into the core.

Concrete syntax, weakest binding first::

    a -> b          right associative
    a | b
    a & b
    a U b, a U+ b, a S b, a S+ b     right associative
    ! X Y F G P H K[ag] W[ag] F<=n P<=n G<=n H<=n X^n Y^n   prefix

Atoms are proposition identifiers, ``true``, ``false`` and ``first``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .errors import ParseError, VocabularyError
from .vocab import Vocabulary


class Formula:
    """Base class of all syntax tree nodes."""

    __slots__ = ()

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class First(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class StrictUntil(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class StrictSince(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Prev(Formula):
    arg: Formula


@dataclass(frozen=True)
class Finally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Past(Formula):
    arg: Formula


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Historically(Formula):
    arg: Formula


@dataclass(frozen=True)
class Know(Formula):
    agent: str
    arg: Formula


@dataclass(frozen=True)
class KnowWhether(Formula):
    agent: str
    arg: Formula


@dataclass(frozen=True)
class BoundedFinally(Formula):
    bound: int
    arg: Formula


@dataclass(frozen=True)
class BoundedPast(Formula):
    bound: int
    arg: Formula


@dataclass(frozen=True)
class BoundedGlobally(Formula):
    bound: int
    arg: Formula


@dataclass(frozen=True)
class BoundedHistorically(Formula):
    bound: int
    arg: Formula


@dataclass(frozen=True)
class IterNext(Formula):
    bound: int
    arg: Formula


@dataclass(frozen=True)
class IterPrev(Formula):
    bound: int
    arg: Formula


def _memoize_hash(cls):
    # formulas are immutable and deeply nested; hash each node once
    compute = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = compute(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__


for _cls in Formula.__subclasses__():
    _memoize_hash(_cls)


def false_() -> Formula:
    return Not(TrueF())


def anchored(f: Formula) -> Formula:
    """``P (first & f)``: holds at a position iff ``f`` holds at position 1."""
    return Past(And(First(), f))


CORE_TYPES = (Prop, Not, And, StrictUntil, StrictSince, Know)
_BINARY = {And: "&", Or: "|", Implies: "->", StrictUntil: "U+", StrictSince: "S+",
           Until: "U", Since: "S"}
_UNARY = {Next: "X", Prev: "Y", Finally: "F", Past: "P", Globally: "G", Historically: "H"}
_BOUNDED = {BoundedFinally: "F<=", BoundedPast: "P<=", BoundedGlobally: "G<=",
            BoundedHistorically: "H<=", IterNext: "X^", IterPrev: "Y^"}
_PREC = {Implies: 1, Or: 2, And: 3, StrictUntil: 4, StrictSince: 4, Until: 4, Since: 4}


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Prop, TrueF, First)):
        return ()
    if type(f) in _BINARY:
        return (f.left, f.right)
    return (f.arg,)


def subformulas(f: Formula) -> Iterator[Formula]:
    """Post-order traversal, duplicates included."""
    for c in children(f):
        yield from subformulas(c)
    yield f


def distinct_subformulas(f: Formula) -> list[Formula]:
    """Each node object once, children before parents.

    Nodes are told apart by identity, so equal subtrees built separately may
    both appear; callers only collect sets from the result.
    """
    seen = set()
    out = []
    stack = [(f, False)]
    while stack:
        g, expanded = stack.pop()
        if expanded:
            out.append(g)
            continue
        if id(g) in seen:
            continue
        seen.add(id(g))
        stack.append((g, True))
        stack.extend((c, False) for c in reversed(children(g)))
    return out


def size(f: Formula) -> int:
    """Number of nodes of the syntax tree (shared subterms counted repeatedly)."""
    sizes: dict = {}
    for g in distinct_subformulas(f):
        sizes[id(g)] = 1 + sum(sizes[id(c)] for c in children(g))
    return sizes[id(f)]


def props_of(f: Formula) -> set[str]:
    return {g.name for g in distinct_subformulas(f) if isinstance(g, Prop)}


def agents_of(f: Formula) -> set[str]:
    return {g.agent for g in distinct_subformulas(f) if isinstance(g, (Know, KnowWhether))}


def is_core(f: Formula) -> bool:
    return all(isinstance(g, CORE_TYPES) for g in distinct_subformulas(f))


def check_vocabulary(f: Formula, vocab: Vocabulary) -> None:
    for p in sorted(props_of(f)):
        vocab.prop_index(p)
    for a in sorted(agents_of(f)):
        vocab.agent_mask(a)


# -- printing ----------------------------------------------------------------

def format_formula(f: Formula, full: bool = False) -> str:
    """Render ``f`` in the concrete syntax.

    The default output uses as few parentheses as the precedences allow;
    ``full=True`` parenthesizes every binary node.  Both parse back to ``f``.
    """
    return _fmt(f, full)


def _unary_prefix(f: Formula) -> str | None:
    t = type(f)
    if t is Not:
        return "!"
    if t in _UNARY:
        return _UNARY[t]
    if t is Know:
        return f"K[{f.agent}]"
    if t is KnowWhether:
        return f"W[{f.agent}]"
    if t in _BOUNDED:
        return f"{_BOUNDED[t]}{f.bound}"
    return None


def _fmt(f: Formula, full: bool) -> str:
    t = type(f)
    if t is Prop:
        return f.name
    if t is TrueF:
        return "true"
    if t is First:
        return "first"
    if t in _BINARY:
        op = _BINARY[t]
        if full:
            return f"({_fmt(f.left, full)} {op} {_fmt(f.right, full)})"
        prec = _PREC[t]
        right_assoc = prec in (1, 4)
        left = _fmt(f.left, full)
        right = _fmt(f.right, full)
        lp = _PREC.get(type(f.left))
        rp = _PREC.get(type(f.right))
        if lp is not None and (lp < prec or (lp == prec and right_assoc)):
            left = f"({left})"
        if rp is not None and (rp < prec or (rp == prec and not right_assoc)):
            right = f"({right})"
        return f"{left} {op} {right}"
    prefix = _unary_prefix(f)
    inner = _fmt(f.arg, full)
    arg_is_binary = type(f.arg) in _BINARY
    if t is Not:
        if isinstance(f.arg, (Prop, TrueF, First, Not)):
            return f"!{inner}"
        if arg_is_binary and full:
            return f"!{inner}"
        return f"!({inner})"
    if arg_is_binary and not full:
        inner = f"({inner})"
    return f"{prefix} {inner}"


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<le><=)|(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[!&|()\[\]^+]))"
)
_PREFIX_KW = {"X": Next, "Y": Prev, "F": Finally, "P": Past, "G": Globally, "H": Historically}
_BOUNDABLE = {"F": BoundedFinally, "P": BoundedPast, "G": BoundedGlobally, "H": BoundedHistorically}
_ITERABLE = {"X": IterNext, "Y": IterPrev}
_KEYWORDS = frozenset({"true", "false", "first", "X", "Y", "F", "G", "P", "H", "K", "W", "U", "S"})


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", position=pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        found = tok[1] if tok[0] != "eof" else "end of input"
        return ParseError(f"{msg}, found {found!r}", position=tok[2])

    def expect_sym(self, sym):
        tok = self.peek()
        if tok[0] == "sym" and tok[1] == sym:
            return self.advance()
        raise self.error(f"expected {sym!r}")

    def expect_num(self):
        tok = self.peek()
        if tok[0] != "num":
            raise self.error("expected a number")
        self.advance()
        return int(tok[1])

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek()[0] != "eof":
            raise self.error("unexpected token")
        return f

    def implication(self):
        left = self.disjunction()
        if self.peek()[0] == "arrow":
            self.advance()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.peek() [0:2] == ("sym", "|"):
            self.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.temporal()
        while self.peek()[0:2] == ("sym", "&"):
            self.advance()
            left = And(left, self.temporal())
        return left

    def temporal(self):
        left = self.unary()
        tok = self.peek()
        if tok[0] == "ident" and tok[1] in ("U", "S"):
            self.advance()
            strict = self.peek()[0:2] == ("sym", "+")
            if strict:
                self.advance()
            right = self.temporal()
            if tok[1] == "U":
                return StrictUntil(left, right) if strict else Until(left, right)
            return StrictSince(left, right) if strict else Since(left, right)
        return left

    def unary(self):
        tok = self.peek()
        kind, val = tok[0], tok[1]
        if kind == "sym" and val == "!":
            self.advance()
            return Not(self.unary())
        if kind == "sym" and val == "(":
            self.advance()
            f = self.implication()
            self.expect_sym(")")
            return f
        if kind == "ident":
            if val in ("K", "W"):
                self.advance()
                self.expect_sym("[")
                agent = self.peek()
                if agent[0] != "ident" or agent[1] in _KEYWORDS:
                    raise self.error("expected an agent name")
                self.advance()
                self.expect_sym("]")
                arg = self.unary()
                return Know(agent[1], arg) if val == "K" else KnowWhether(agent[1], arg)
            if val in _PREFIX_KW:
                self.advance()
                nxt = self.peek()
                if nxt[0] == "le":
                    if val not in _BOUNDABLE:
                        raise self.error(f"operator {val} takes no bound", nxt)
                    self.advance()
                    bound = self.expect_num()
                    return _BOUNDABLE[val](bound, self.unary())
                if nxt[0:2] == ("sym", "^"):
                    if val not in _ITERABLE:
                        raise self.error(f"operator {val} cannot be iterated", nxt)
                    self.advance()
                    bound = self.expect_num()
                    return _ITERABLE[val](bound, self.unary())
                return _PREFIX_KW[val](self.unary())
            if val == "true":
                self.advance()
                return TrueF()
            if val == "false":
                self.advance()
                return false_()
            if val == "first":
                self.advance()
                return First()
            if val in ("U", "S"):
                raise self.error("binary operator without left operand")
            self.advance()
            return Prop(val)
        if kind == "eof":
            raise self.error("unexpected end of formula")
        raise self.error("unexpected token")


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


# -- desugaring --------------------------------------------------------------

class _Desugar:
    def __init__(self, vocab: Vocabulary | None):
        self.vocab = vocab
        self.memo: dict[Formula, Formula] = {}

    def top(self) -> Formula:
        if self.vocab is None or not self.vocab.props:
            raise VocabularyError("'true' needs at least one proposition in the vocabulary")
        p = Prop(self.vocab.props[0])
        return self.or_(p, Not(p))

    def bottom(self) -> Formula:
        return Not(self.top())

    @staticmethod
    def or_(a: Formula, b: Formula) -> Formula:
        return Not(And(Not(a), Not(b)))

    def next_(self, a: Formula) -> Formula:
        return StrictUntil(self.bottom(), a)

    def prev_(self, a: Formula) -> Formula:
        return StrictSince(self.bottom(), a)

    def until(self, a, b):
        return self.or_(b, And(a, StrictUntil(a, b)))

    def since(self, a, b):
        return self.or_(b, And(a, StrictSince(a, b)))

    def finally_(self, a):
        return self.until(self.top(), a)

    def past(self, a):
        return self.since(self.top(), a)

    def iterate(self, step, n, a):
        for _ in range(n):
            a = step(a)
        return a

    def bounded(self, step, n, a):
        out = a
        cur = a
        for _ in range(n):
            cur = step(cur)
            out = self.or_(out, cur)
        return out

    def __call__(self, f: Formula) -> Formula:
        got = self.memo.get(f)
        if got is None:
            got = self.memo[f] = self.rewrite(f)
        return got

    def rewrite(self, f: Formula) -> Formula:
        t = type(f)
        if t is Prop:
            if self.vocab is not None:
                self.vocab.prop_index(f.name)
            return f
        if t is TrueF:
            return self.top()
        if t is First:
            return Not(self.prev_(self.top()))
        if t is Not:
            return Not(self(f.arg))
        if t is And:
            return And(self(f.left), self(f.right))
        if t is Or:
            return self.or_(self(f.left), self(f.right))
        if t is Implies:
            return self.or_(Not(self(f.left)), self(f.right))
        if t is StrictUntil:
            return StrictUntil(self(f.left), self(f.right))
        if t is StrictSince:
            return StrictSince(self(f.left), self(f.right))
        if t is Until:
            return self.until(self(f.left), self(f.right))
        if t is Since:
            return self.since(self(f.left), self(f.right))
        if t is Next:
            return self.next_(self(f.arg))
        if t is Prev:
            return self.prev_(self(f.arg))
        if t is Finally:
            return self.finally_(self(f.arg))
        if t is Past:
            return self.past(self(f.arg))
        if t is Globally:
            return Not(self.finally_(Not(self(f.arg))))
        if t is Historically:
            return Not(self.past(Not(self(f.arg))))
        if t in (Know, KnowWhether):
            if self.vocab is not None:
                self.vocab.agent_mask(f.agent)
            a = self(f.arg)
            if t is Know:
                return Know(f.agent, a)
            return self.or_(Know(f.agent, a), Know(f.agent, Not(a)))
        if t in _BOUNDED:
            if f.bound < 0:
                raise ValueError("bounds must be nonnegative")
            a = self(f.arg)
            if t is IterNext:
                return self.iterate(self.next_, f.bound, a)
            if t is IterPrev:
                return self.iterate(self.prev_, f.bound, a)
            if t is BoundedFinally:
                return self.bounded(self.next_, f.bound, a)
            if t is BoundedPast:
                return self.bounded(self.prev_, f.bound, a)
            if t is BoundedGlobally:
                return Not(self.bounded(self.next_, f.bound, Not(a)))
            return Not(self.bounded(self.prev_, f.bound, Not(a)))
        raise TypeError(f"not a formula: {f!r}")


def desugar(f: Formula, vocab: Vocabulary | None = None) -> Formula:
    """Rewrite ``f`` into the core connectives.

    ``true`` expands to ``p | !p`` for the first proposition ``p`` of
    ``vocab``; a vocabulary is only needed when such a constant occurs.
    Proposition and agent names are checked against ``vocab`` when given.
    """
    return _Desugar(vocab)(f)
