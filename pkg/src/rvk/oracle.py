"""Brute-force reference semantics over lasso words of small systems.

Nothing here reuses the automata algorithms: lasso membership is decided by
closing the one-loop-iteration reachability relation, lassos are enumerated
by walking the transition table, and formulas are evaluated clause by clause
on explicit positions.  Knowledge quantifies over the enumerated lassos only,
so results are exact when every observation class has a representative
within the bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .automata import Lasso
from .errors import ResourceError
from .logic import (And, BoundedFinally, BoundedGlobally, BoundedHistorically, BoundedPast,
                    Finally, First, Formula, Globally, Historically, Implies, IterNext, IterPrev,
                    Know, KnowWhether, Next, Not, Or, Past, Prev, Prop, Since, StrictSince,
                    StrictUntil, TrueF, Until, size)

MAX_ORACLE_STATES = 8


@dataclass(frozen=True)
class OracleConfig:
    stem_bound: int = 6
    loop_bound: int = 4

    def __post_init__(self):
        if self.stem_bound < 1 or self.loop_bound < 1:
            raise ValueError("oracle bounds must be at least 1")

    @classmethod
    def for_states(cls, n: int) -> "OracleConfig":
        return cls(max(1, 2 * n), max(1, n))


def _step(a, states, letter):
    return frozenset(t for q in states for l, t in a.succ[q] if l == letter)


def lasso_accepted(a, lasso: Lasso) -> bool:
    """Membership of ``stem . loop^omega``; accepts Buchi and generalized Buchi automata."""
    family = getattr(a, "accepting_sets", None)
    if family is None:
        family = (a.accepting,)
    full = (1 << len(family)) - 1

    def visited(q):
        return sum(1 << i for i, f in enumerate(family) if q in f)

    cur = frozenset({a.initial})
    for letter in lasso.stem:
        cur = _step(a, cur, letter)
    # one loop iteration from q: reachable (end state, sets visited on the way)
    block = {}
    for q in range(a.num_states):
        frontier = {(q, 0)}
        for letter in lasso.loop:
            frontier = {(t, m | visited(t)) for s, m in frontier for l, t in a.succ[s] if l == letter}
        block[q] = frontier
    closure = {(q, t, m) for q in block for t, m in block[q]}
    while True:
        new = {(q, t2, m | m2) for q, t, m in closure for t2, m2 in block[t]} - closure
        if not new:
            break
        closure |= new
    reach = set(cur) | {t for q, t, _ in closure if q in cur}
    return any((q, q, full) in closure for q in reach)


def enumerate_lassos(a, cfg: OracleConfig | None = None) -> tuple[Lasso, ...]:
    """Every accepted lasso within the bounds, in a deterministic order."""
    cfg = cfg or OracleConfig()
    if a.num_states > MAX_ORACLE_STATES:
        raise ResourceError(f"oracle enumeration is limited to {MAX_ORACLE_STATES} states")
    letters = sorted({l for row in a.succ for l, _ in row})

    def words(start, max_len, min_len):
        out = []
        stack = [((), start)]
        while stack:
            word, states = stack.pop()
            if len(word) >= min_len:
                out.append((word, states))
            if len(word) < max_len:
                for letter in letters:
                    nxt = _step(a, states, letter)
                    if nxt:
                        stack.append((word + (letter,), nxt))
        return out

    found = []
    for stem, states in words(frozenset({a.initial}), cfg.stem_bound, 0):
        for loop, _ in words(states, cfg.loop_bound, 1):
            lasso = Lasso(stem, loop)
            if lasso_accepted(a, lasso):
                found.append(lasso)
    found.sort(key=lambda l: (len(l.stem) + len(l.loop), l.stem, l.loop))
    return tuple(found)


class Oracle:
    """Evaluates formulas on enumerated lassos of one system."""

    def __init__(self, system, cfg: OracleConfig | None = None, lassos: Sequence[Lasso] | None = None):
        self.system = system
        self.vocab = system.vocab
        self.cfg = cfg or OracleConfig()
        self.lassos = tuple(lassos) if lassos is not None else enumerate_lassos(system, self.cfg)
        self._memo: dict = {}
        self._classes: dict = {}
        self.unroll = 2

    # positions past the horizon are folded back by one loop length at a time
    def horizon(self, w: Lasso) -> int:
        return len(w.stem) + self.unroll * len(w.loop)

    def fold(self, w: Lasso, k: int) -> int:
        h = self.horizon(w)
        if k <= h:
            return k
        n = len(w.loop)
        return h - n + (k - h - 1) % n + 1

    def indistinguishable(self, agent: str, w: Lasso, k: int) -> list[Lasso]:
        key = (agent, k)
        table = self._classes.get(key)
        if table is None:
            mask = self.vocab.agent_mask(agent)
            table = {}
            for v in self.lassos:
                table.setdefault(tuple(e & mask for e in v.prefix(k)), []).append(v)
            self._classes[key] = table
        mask = self.vocab.agent_mask(agent)
        return table.get(tuple(e & mask for e in w.prefix(k)), [])

    def holds(self, w: Lasso, k: int, f: Formula) -> bool:
        if k < 1:
            raise ValueError("positions start at 1")
        # knowledge depends on the observation class at k itself, so no folding
        if type(f) not in (Know, KnowWhether):
            k = self.fold(w, k)
        key = (w, k, f)
        got = self._memo.get(key)
        if got is None:
            got = self._memo[key] = self._eval(w, k, f)
        return got

    def _future(self, w, k):
        """Positions after ``k`` covering every residue of the periodic part."""
        return range(k + 1, max(k, self.horizon(w)) + len(w.loop) + 1)

    def _eval(self, w: Lasso, k: int, f: Formula) -> bool:
        t = type(f)
        h = self.holds
        if t is Prop:
            return bool(w.letter(k) & self.vocab.prop_bit(f.name))
        if t is TrueF:
            return True
        if t is First:
            return k == 1
        if t is Not:
            return not h(w, k, f.arg)
        if t is And:
            return h(w, k, f.left) and h(w, k, f.right)
        if t is Or:
            return h(w, k, f.left) or h(w, k, f.right)
        if t is Implies:
            return (not h(w, k, f.left)) or h(w, k, f.right)
        if t is StrictUntil:
            for j in self._future(w, k):
                if h(w, j, f.right):
                    return True
                if not h(w, j, f.left):
                    return False
            return False
        if t is Until:
            return h(w, k, f.right) or (h(w, k, f.left) and self._eval(w, k, StrictUntil(f.left, f.right)))
        if t is StrictSince:
            for j in range(k - 1, 0, -1):
                if h(w, j, f.right):
                    return True
                if not h(w, j, f.left):
                    return False
            return False
        if t is Since:
            return h(w, k, f.right) or (h(w, k, f.left) and self._eval(w, k, StrictSince(f.left, f.right)))
        if t is Next:
            return h(w, k + 1, f.arg)
        if t is Prev:
            return k > 1 and h(w, k - 1, f.arg)
        if t is Finally:
            return h(w, k, f.arg) or any(h(w, j, f.arg) for j in self._future(w, k))
        if t is Globally:
            return h(w, k, f.arg) and all(h(w, j, f.arg) for j in self._future(w, k))
        if t is Past:
            return any(h(w, j, f.arg) for j in range(1, k + 1))
        if t is Historically:
            return all(h(w, j, f.arg) for j in range(1, k + 1))
        if t is IterNext:
            return h(w, k + f.bound, f.arg)
        if t is IterPrev:
            return k - f.bound >= 1 and h(w, k - f.bound, f.arg)
        if t is BoundedFinally:
            return any(h(w, j, f.arg) for j in range(k, k + f.bound + 1))
        if t is BoundedGlobally:
            return all(h(w, j, f.arg) for j in range(k, k + f.bound + 1))
        if t is BoundedPast:
            return any(h(w, j, f.arg) for j in range(max(1, k - f.bound), k + 1))
        if t is BoundedHistorically:
            return all(h(w, j, f.arg) for j in range(max(1, k - f.bound), k + 1))
        if t is Know:
            return all(h(v, k, f.arg) for v in self.indistinguishable(f.agent, w, k))
        if t is KnowWhether:
            peers = self.indistinguishable(f.agent, w, k)
            return all(h(v, k, f.arg) for v in peers) or not any(h(v, k, f.arg) for v in peers)
        raise TypeError(f"unexpected node {f!r}")

    def evaluate(self, w: Lasso, k: int, f: Formula) -> bool:
        """Truth of ``f`` at position ``k`` of ``w``, unrolling enough for ``f``."""
        # more unrolling than needed is harmless, so the memo survives smaller formulas
        unroll = size(f) + 2
        if unroll > self.unroll:
            self.unroll = unroll
            self._memo.clear()
        return self.holds(w, k, f)


def oracle_eval(system, w: Lasso, k: int, f: Formula, cfg: OracleConfig | None = None,
                oracle: Oracle | None = None) -> bool:
    oracle = oracle or Oracle(system, cfg)
    return oracle.evaluate(w, k, f)


def brute_force_belief(a, agent: str, observation: Sequence[int]) -> frozenset[int]:
    """States ending some finite run over some word observed as ``observation``."""
    vocab = a.vocab
    mask = vocab.agent_mask(agent)
    hidden = [e for e in vocab.letters() if not e & mask]
    candidates = [[o | h for h in hidden] for o in observation]

    ends = set()

    def walk(i, q):
        if i == len(candidates):
            ends.add(q)
            return
        for letter in candidates[i]:
            for l, t in a.succ[q]:
                if l == letter:
                    walk(i + 1, t)

    walk(0, a.initial)
    return frozenset(ends)


def belief_table(a, agent: str, max_len: int) -> dict[tuple[int, ...], frozenset[int]]:
    """End states of finite runs, grouped by observation, for all words up to ``max_len``.

    Walks every word letter by letter (words without a run are cut off, as
    they contribute nothing).  Observations absent from the table have the
    empty belief.
    """
    vocab = a.vocab
    mask = vocab.agent_mask(agent)
    letters = vocab.letters()
    table: dict[tuple[int, ...], set[int]] = {(): {a.initial}}
    stack = [((), frozenset({a.initial}))]
    while stack:
        obs, states = stack.pop()
        if len(obs) == max_len:
            continue
        for letter in letters:
            nxt = _step(a, states, letter)
            if nxt:
                key = obs + (letter & mask,)
                table.setdefault(key, set()).update(nxt)
                stack.append((key, nxt))
    return {k: frozenset(v) for k, v in table.items()}
