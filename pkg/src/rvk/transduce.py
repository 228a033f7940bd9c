"""Truth-annotating transducers for core formulas over a system automaton.

A transducer for ``(S, phi)`` is a Buchi automaton with the same language as
``S`` whose states carry an output bit ``gamma``: along every accepting run
over a word ``w``, the state reached after ``k`` letters outputs 1 exactly
when ``phi`` holds at position ``k`` of ``w``.  The automaton is built by
structural induction on ``phi``; every case ends with degeneralization and
pruning to the productive part.

Each transducer state also records the system state it tracks.  Binary
products only pair states that track the same system state.  Every accepting
system run lifts to an accepting run of each sub-transducer over the same
system states, so this loses no accepting runs while avoiding a product of
independent system copies.  ``shared=False`` builds the plain product instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .automata import (BuchiAutomaton, GeneralizedBuchiAutomaton, degeneralize, explore,
                       prune_with_map, state_budget)
from .knowledge import KnowledgeMonitor, monitor_from_transducer
from .logic import (CORE_TYPES, And, Formula, Know, Not, Prop, StrictSince, StrictUntil,
                    distinct_subformulas, format_formula)

log = logging.getLogger(__name__)

INIT = 2


@dataclass(frozen=True, eq=False)
class Transducer:
    ba: BuchiAutomaton
    gamma: tuple[bool, ...]
    system_state: tuple[int, ...]
    formula: Formula | None = None

    def __post_init__(self):
        if len(self.gamma) != self.ba.num_states or len(self.system_state) != self.ba.num_states:
            raise ValueError("gamma and system map must be total on the states")

    def flipped(self, formula=None) -> "Transducer":
        return Transducer(self.ba, tuple(not g for g in self.gamma), self.system_state, formula)


class TransducerBuilder:
    """Builds and caches transducers and knowledge monitors for one system."""

    def __init__(self, system: BuchiAutomaton, shared: bool = True, budget: int | None = None):
        self.system = system
        self.vocab = system.vocab
        self.shared = shared
        self.budget = state_budget() if budget is None else budget
        pruned, kept = prune_with_map(system)
        self.empty = not pruned.accepting
        self.base = pruned
        self.base_to_system = kept
        self._cache: dict[Formula, Transducer] = {}
        self._monitors: dict[tuple[Formula, str], KnowledgeMonitor] = {}

    # -- public entry points -------------------------------------------------

    def transducer(self, f: Formula) -> Transducer:
        got = self._cache.get(f)
        if got is None:
            for g in distinct_subformulas(f):
                t = type(g)
                if t is Prop:
                    self.vocab.prop_index(g.name)
                elif t is Know:
                    self.vocab.agent_mask(g.agent)
                elif t not in CORE_TYPES:
                    raise ValueError(f"not a core formula: {format_formula(f)}; desugar it first")
            got = self._get(f)
        return got

    def _get(self, f: Formula) -> Transducer:
        got = self._cache.get(f)
        if got is None:
            got = self._cache[f] = self._build(f)
        return got

    def knowledge_monitor(self, f: Formula, agent: str) -> KnowledgeMonitor:
        key = (f, agent)
        got = self._monitors.get(key)
        if got is None:
            self.vocab.agent_mask(agent)
            got = monitor_from_transducer(self.transducer(f), agent, f, self.budget)
            self._monitors[key] = got
        return got

    # -- cases -----------------------------------------------------------------

    def _build(self, f: Formula) -> Transducer:
        if self.empty:
            # the canonical empty automaton, so that every belief over it is empty
            return Transducer(self.base, (False,), tuple(self.base_to_system), f)
        t = type(f)
        if t is Prop:
            out = self._atom(f)
        elif t is Not:
            out = self._get(f.arg).flipped(f)
        elif t is And:
            out = self._conjunction(f)
        elif t is StrictSince:
            out = self._since(f)
        elif t is StrictUntil:
            out = self._until(f)
        elif t is Know:
            out = self._know(f)
        else:
            raise TypeError(f"unexpected node {f!r}")
        if log.isEnabledFor(logging.DEBUG):
            log.debug("transducer for %s: %d states", format_formula(f), out.ba.num_states)
        return out

    def _finish(self, f, labels, succ, accepting_sets, gamma_of, system_of, generalized=True):
        """Degeneralize and prune a materialized product, transporting outputs."""
        vocab = self.vocab
        n = len(labels)
        if generalized:
            gba = GeneralizedBuchiAutomaton._trusted(vocab, n, 0, succ,
                                                     tuple(frozenset(x) for x in accepting_sets))
            ba, state_map = degeneralize(gba, self.budget)
        else:
            ba = BuchiAutomaton._trusted(vocab, n, 0, succ, frozenset(accepting_sets[0]))
            state_map = list(range(n))
        pruned, kept = prune_with_map(ba)
        gamma = tuple(bool(gamma_of(labels[state_map[q]])) for q in kept)
        system = tuple(system_of(labels[state_map[q]]) for q in kept)
        if not pruned.accepting:
            # only possible for an empty system language, handled earlier
            raise AssertionError("transducer lost the system language")
        return Transducer(pruned, gamma, system, f)

    def _atom(self, f: Prop) -> Transducer:
        s = self.base
        bit = self.vocab.prop_bit(f.name)

        def expand(label):
            q, _ = label
            for letter, t in s.succ[q]:
                yield letter, (t, 1 if letter & bit else 0)

        labels, succ = explore((s.initial, 0), expand, self.budget)
        acc = [i for i, (q, _) in enumerate(labels) if q in s.accepting]
        kept = self.base_to_system
        return self._finish(f, labels, succ, [acc], lambda l: l[1], lambda l: kept[l[0]],
                            generalized=False)

    def _pairs(self, a1: Transducer, a2: Transducer, q1: int, q2: int):
        """Joint moves ``(letter, t1, t2)`` of two transducers from ``(q1, q2)``."""
        row2 = a2.ba.by_letter[q2]
        sys1, sys2 = a1.system_state, a2.system_state
        for letter, ts1 in a1.ba.by_letter[q1].items():
            ts2 = row2.get(letter)
            if not ts2:
                continue
            for t1 in ts1:
                for t2 in ts2:
                    if self.shared and sys1[t1] != sys2[t2]:
                        continue
                    yield letter, t1, t2

    def _conjunction(self, f: And) -> Transducer:
        if self.shared and (f.left == Not(f.right) or f.right == Not(f.left)):
            # a formula and its negation never hold together
            base = self.base
            return Transducer(base, (False,) * base.num_states, tuple(self.base_to_system), f)
        a1, a2 = self._get(f.left), self._get(f.right)
        if self.shared:
            if a1.ba is a2.ba:
                # both annotate the same automaton: every run carries both outputs
                gamma = tuple(x and y for x, y in zip(a1.gamma, a2.gamma))
                return Transducer(a1.ba, gamma, a1.system_state, f)
            for a, b in ((a1, a2), (a2, a1)):
                const = _constant_output(a)
                if const is not None:
                    return replace(b if const else a, formula=f)

        def expand(label):
            q1, q2 = label
            for letter, t1, t2 in self._pairs(a1, a2, q1, q2):
                yield letter, (t1, t2)

        labels, succ = explore((a1.ba.initial, a2.ba.initial), expand, self.budget)
        f1 = [i for i, (q1, _) in enumerate(labels) if q1 in a1.ba.accepting]
        f2 = [i for i, (_, q2) in enumerate(labels) if q2 in a2.ba.accepting]
        g1, g2 = a1.gamma, a2.gamma
        return self._finish(f, labels, succ, [f1, f2], lambda l: g1[l[0]] and g2[l[1]],
                            lambda l: a1.system_state[l[0]])

    def _since(self, f: StrictSince) -> Transducer:
        a1, a2 = self._get(f.left), self._get(f.right)
        g1, g2 = a1.gamma, a2.gamma

        def expand(label):
            q1, q2, theta = label
            if theta == INIT:
                nxt = 0
            else:
                nxt = 1 if g2[q2] or (g1[q1] and theta == 1) else 0
            for letter, t1, t2 in self._pairs(a1, a2, q1, q2):
                yield letter, (t1, t2, nxt)

        labels, succ = explore((a1.ba.initial, a2.ba.initial, INIT), expand, self.budget)
        f1 = [i for i, (q1, _, th) in enumerate(labels) if q1 in a1.ba.accepting and th != INIT]
        f2 = [i for i, (_, q2, th) in enumerate(labels) if q2 in a2.ba.accepting and th != INIT]
        return self._finish(f, labels, succ, [f1, f2], lambda l: l[2] == 1,
                            lambda l: a1.system_state[l[0]])

    def _until(self, f: StrictUntil) -> Transducer:
        a1, a2 = self._get(f.left), self._get(f.right)
        g1, g2 = a1.gamma, a2.gamma

        def expand(label):
            q1, q2, theta = label
            for letter, t1, t2 in self._pairs(a1, a2, q1, q2):
                for nxt in (0, 1):
                    if theta != INIT:
                        holds = g2[t2] or (g1[t1] and nxt == 1)
                        if holds != (theta == 1):
                            continue
                    yield letter, (t1, t2, nxt)

        labels, succ = explore((a1.ba.initial, a2.ba.initial, INIT), expand, self.budget)
        f1 = [i for i, (q1, _, th) in enumerate(labels) if q1 in a1.ba.accepting and th != INIT]
        f2 = [i for i, (_, q2, th) in enumerate(labels) if q2 in a2.ba.accepting and th != INIT]
        # pending positive obligations must eventually be discharged
        f3 = [i for i, (_, q2, th) in enumerate(labels) if th == 0 or g2[q2]]
        return self._finish(f, labels, succ, [f1, f2, f3], lambda l: l[2] == 1,
                            lambda l: a1.system_state[l[0]])

    def _know(self, f: Know) -> Transducer:
        monitor = self._monitors.get((f.arg, f.agent))
        if monitor is None:
            monitor = monitor_from_transducer(self._get(f.arg), f.agent, f.arg, self.budget)
            self._monitors[(f.arg, f.agent)] = monitor
        machine = monitor.machine
        mask = self.vocab.agent_mask(f.agent)
        s = self.base

        def expand(label):
            b, q = label
            row = machine.delta[b]
            for letter, t in s.succ[q]:
                yield letter, (row[letter & mask], t)

        labels, succ = explore((machine.initial, s.initial), expand, self.budget)
        acc = [i for i, (_, q) in enumerate(labels) if q in s.accepting]
        kept = self.base_to_system
        return self._finish(f, labels, succ, [acc], lambda l: machine.outputs[l[0]],
                            lambda l: kept[l[1]], generalized=False)


def _constant_output(t: Transducer) -> bool | None:
    """The output shared by every state entered by some transition, if constant.

    Such a formula is then valid (or unsatisfiable) at every position >= 1.
    """
    entered = {q for row in t.ba.succ for _, q in row}
    values = {t.gamma[q] for q in entered}
    return values.pop() if len(values) == 1 else None


def build_transducer(system: BuchiAutomaton, formula: Formula, shared: bool = True) -> Transducer:
    """Transducer for a core formula over ``system``."""
    return TransducerBuilder(system, shared=shared).transducer(formula)
