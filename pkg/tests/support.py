"""Helpers shared by the test modules: catalog access, random systems, sampling."""

from __future__ import annotations

import functools
import itertools
import random
from pathlib import Path

from rvk import catalog
from rvk.analyses import Nfa
from rvk.automata import BuchiAutomaton, Lasso, accepting_run
from rvk import logic as L
from rvk.logic import parse_formula
from rvk.oracle import Oracle, OracleConfig
from rvk.transduce import TransducerBuilder
from rvk.vocab import Vocabulary

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

EXACT = ("s1", "s2", "s3", "s4", "nested", "opaque", "monitorable", "epistemic_monitor",
         "codiag1", "codiag2", "codiag3")
BLACKBOX = ("blackbox_p", "blackbox_pr")
CURATED = EXACT + BLACKBOX
DIAG = ("s1", "s2", "s3", "s4")

# black boxes accept every word: default bounds give thousands (or ~1.9M) lassos
ORACLE_BOUNDS = {"blackbox_p": OracleConfig(4, 3), "blackbox_pr": OracleConfig(3, 2)}


@functools.lru_cache(maxsize=None)
def system(name: str) -> BuchiAutomaton:
    return catalog.load(name)


@functools.lru_cache(maxsize=None)
def oracle(name: str) -> Oracle:
    return Oracle(system(name), ORACLE_BOUNDS.get(name))


@functools.lru_cache(maxsize=None)
def builder(name: str) -> TransducerBuilder:
    return TransducerBuilder(system(name))


def ev(vocab: Vocabulary, text: str) -> int:
    return vocab.parse_event(text)


def word(vocab: Vocabulary, *events: str) -> tuple[int, ...]:
    return tuple(vocab.parse_event(e) for e in events)


def lasso(vocab: Vocabulary, stem: str, loop: str) -> Lasso:
    from rvk.formats import parse_word

    return Lasso(tuple(parse_word(stem, vocab)), tuple(parse_word(loop, vocab)))


# -- random material ----------------------------------------------------------

def random_system(rng: random.Random, max_states: int = 5, max_props: int = 3,
                  min_states: int = 1, min_props: int = 1) -> BuchiAutomaton:
    """Small random automaton over props drawn from e, p, r.

    ``e`` is never observable; agents ``a`` and ``b`` see random subsets of
    the remaining props.
    """
    n = rng.randint(min_states, max_states)
    k = rng.randint(min_props, max_props)
    props = ("e", "p", "r")[:k]
    visible = props[1:]
    agents = tuple((name, frozenset(p for p in visible if rng.random() < 0.6)) for name in "ab")
    vocab = Vocabulary(props, agents)
    letters = vocab.letters()
    edges = []
    for q in range(n):
        for _ in range(rng.randint(1, 3)):
            edges.append((q, rng.choice(letters), rng.randrange(n)))
    accepting = {q for q in range(n) if rng.random() < 0.5} or {rng.randrange(n)}
    return BuchiAutomaton.from_edges(vocab, n, 0, edges, accepting)


def random_systems(seed: int, count: int, **kw) -> list[BuchiAutomaton]:
    rng = random.Random(seed)
    return [random_system(rng, **kw) for _ in range(count)]


def random_lasso(rng: random.Random, letters, max_stem: int = 4, max_loop: int = 3) -> Lasso:
    stem = tuple(rng.choice(letters) for _ in range(rng.randint(0, max_stem)))
    loop = tuple(rng.choice(letters) for _ in range(rng.randint(1, max_loop)))
    return Lasso(stem, loop)


def random_lassos(seed: int, letters, count: int = 200, **kw) -> list[Lasso]:
    rng = random.Random(seed)
    return [random_lasso(rng, letters, **kw) for _ in range(count)]


def sample(seq, count: int, seed: int = 0) -> list:
    seq = list(seq)
    if len(seq) <= count:
        return seq
    return random.Random(seed).sample(seq, count)


def positions(w: Lasso) -> range:
    return range(1, len(w.stem) + 2 * len(w.loop) + 1)


def gamma_along(t, w: Lasso, upto: int) -> list[bool] | None:
    """Outputs at positions 1..upto along an accepting run of the transducer."""
    run = accepting_run(t.ba, w, upto)
    if run is None:
        return None
    return [t.gamma[q] for q in run[1:]]


def obs_words(vocab: Vocabulary, agent: str, max_len: int):
    alphabet = vocab.obs_letters(agent)
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# -- formula suites -------------------------------------------------------------

TEMPLATES = (
    "{x}", "!{y}", "X {y}", "Y {x}", "F {y}", "G {x}", "P {y}", "H {x}",
    "{x} U {y}", "{x} S {y}", "{x} U+ {y}", "{x} S+ {y}", "G F {x}", "F G {y}",
    "first", "X^2 {y}", "F<=2 {y}", "G<=1 {x}", "{x} -> X {y}",
    "K[{a}] {x}", "K[{a}] P {y}", "K[{a}] F {y}", "!K[{a}] !{y}", "W[{a}] X {x}",
    "G ({y} -> K[{a}] P {y})", "K[{a}] K[{b}] P {y}", "F K[{a}] G {x}", "X K[{a}] ({x} S {y})",
)


def formula_suite(vocab: Vocabulary, epistemic: bool = True):
    props = vocab.props
    agents = vocab.agent_names
    x, y = props[0], props[-1]
    a = agents[0]
    b = agents[-1]
    out = []
    for t in TEMPLATES:
        if "K[" in t or "W[" in t:
            if not epistemic:
                continue
        out.append(parse_formula(t.format(x=x, y=y, a=a, b=b)))
    return out


# -- where the bounded oracle is exact for knowledge -----------------------------

_UNBOUNDED = (L.Until, L.StrictUntil, L.Finally, L.Globally)
INF = float("inf")
# beyond every position the tests sample (stem + 2 * loop <= 14)
PREFIX_CAP = 16


def lookahead(f) -> float:
    """How many letters past the current position the truth of ``f`` may depend on."""
    t = type(f)
    if t in (L.Prop, L.TrueF, L.First):
        return 0
    if t in _UNBOUNDED:
        return INF
    kids = [lookahead(c) for c in L.children(f)]
    own = max(kids)
    if t is L.Next:
        return own + 1
    if t is L.IterNext:
        return own + f.bound
    if t in (L.BoundedFinally, L.BoundedGlobally):
        return own + f.bound
    return own


def has_knowledge(f) -> bool:
    return any(type(g) in (L.Know, L.KnowWhether) for g in L.subformulas(f))


def productive_states(a) -> set[int]:
    """States reaching an accepting state that lies on a cycle (plain search)."""
    def reach(q):
        seen, todo = set(), [q]
        while todo:
            for _, t in a.succ[todo.pop()]:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        return seen

    after = {q: reach(q) for q in range(a.num_states)}
    recurrent = {f for f in a.accepting if f in after[f]}
    return {q for q in range(a.num_states) if q in recurrent or after[q] & recurrent}


def live_prefixes(a, max_len: int):
    """Nonempty prefixes of L(a) up to ``max_len`` letters, by forward search."""
    good = productive_states(a)
    level = {(): {a.initial}}
    for _ in range(max_len):
        nxt = {}
        for u, states in level.items():
            for q in states:
                for letter, t in a.succ[q]:
                    if t in good:
                        nxt.setdefault(u + (letter,), set()).add(t)
        yield from nxt
        level = nxt


def prefix_complete_upto(a, lassos) -> int:
    """Largest k such that every prefix of length <= k of the language is a prefix
    of one of ``lassos``.  Up to there, observation classes seen by the oracle
    are the true ones.
    """
    good = productive_states(a)
    letters = a.vocab.letters()
    level = {(): {a.initial}}
    k = 0
    while k < PREFIX_CAP:
        nxt = {}
        for word, states in level.items():
            for letter in letters:
                got = {t for q in states for l, t in a.succ[q] if l == letter}
                if got:
                    nxt[word + (letter,)] = got
        real = {w for w, states in nxt.items() if states & good}
        seen = {w.prefix(k + 1) for w in lassos}
        if real != seen:
            return k
        k += 1
        level = {w: nxt[w] for w in real}
    return k


@functools.lru_cache(maxsize=None)
def complete_prefix_length(name: str) -> int:
    return prefix_complete_upto(system(name), oracle(name).lassos)


def exact_positions(complete: int, f, w: Lasso) -> range:
    """Positions of ``w`` at which the oracle's verdict on ``f`` is exact,
    given that its lassos cover every prefix up to length ``complete``.
    """
    full = positions(w)
    if not has_knowledge(f):
        return full
    la = lookahead(f)
    if la == INF:
        return range(1, 1)
    return range(1, min(full.stop, complete - int(la) + 1))


def oracle_positions(name: str, f, w: Lasso) -> range:
    return exact_positions(complete_prefix_length(name), f, w)


# -- NFAs for the opacity reduction -------------------------------------------------

LETTERS = ("g", "h")


def decode_nfa(n: int, k: int, config: int, accepting: int):
    full = (1 << n) - 1
    trans = [[(config >> ((q * k + l) * n)) & full for l in range(k)] for q in range(n)]
    nfa = Nfa(LETTERS[:k], n, frozenset({0}),
              frozenset((q, LETTERS[l], t) for q in range(n) for l in range(k)
                        for t in range(n) if trans[q][l] >> t & 1),
              frozenset(q for q in range(n) if accepting >> q & 1))
    return nfa, trans


def universal_by_words(n: int, k: int, trans, accepting: int) -> bool:
    """Every word up to the bound is accepted.

    A shortest rejected word is a shortest path to a rejecting subset in the
    subset construction, so length 2^n - 1 suffices; words sharing a state
    set are merged level by level.
    """
    bound = max(2 * n + 1, (1 << n) - 1)
    level = {1}
    for _ in range(bound + 1):
        if any(not s & accepting for s in level):
            return False
        nxt = set()
        for s in level:
            for l in range(k):
                image = 0
                for q in range(n):
                    if s >> q & 1:
                        image |= trans[q][l]
                nxt.add(image)
        level = nxt
    return True


def load_representatives():
    rows = []
    with open(DATA / "nfa_language_reps.txt", encoding="utf-8") as fh:
        for line in fh:
            rows.append(tuple(int(x) for x in line.split()))
    return rows
