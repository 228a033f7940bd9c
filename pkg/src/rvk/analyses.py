"""Decision procedures built on transducers and knowledge monitors.

Model checking, bounded diagnosability by a twin-plant search,
codiagnosability, opacity, monitorability and prefix classification, plus
the formula families for these properties and a generator of opacity
instances from NFAs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Sequence

from .automata import (BuchiAutomaton, Lasso, MooreMachine, explore, find_accepting_lasso,
                       prune_productive)
from .errors import PreconditionError, VocabularyError
from .knowledge import build_obs_dfa
from .logic import (Formula, Globally, Historically, Implies, IterNext, IterPrev, Know, Not, Or,
                    Past, Prop, Finally, anchored, desugar)
from .vocab import Vocabulary

MAX_DELAY = 64


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an analysis.

    ``witness`` is a counterexample, leak or violation; ``position`` marks the
    relevant position in it (1-based).  ``observation`` carries an
    observation prefix for analyses whose witness is one.
    """

    holds: bool
    witness: Lasso | None = None
    position: int | None = None
    observation: tuple[int, ...] | None = None
    twin: Lasso | None = None

    def __post_init__(self):
        for name in ("witness", "twin"):
            w = getattr(self, name)
            if w is not None:
                object.__setattr__(self, name, w.normalized())

    def __bool__(self):
        return self.holds


def _builder(system, builder):
    from .transduce import TransducerBuilder

    return builder or TransducerBuilder(system)


# -- model checking ----------------------------------------------------------

def model_check(system: BuchiAutomaton, formula: Formula, builder=None) -> CheckResult:
    """Does ``formula`` hold at position 1 of every word of the system?

    The counterexample search runs on the transducer of the negation,
    looking for an accepting run whose state after the first letter outputs 1.
    """
    builder = _builder(system, builder)
    negated = desugar(Not(formula), system.vocab)
    t = builder.transducer(negated)
    gamma = t.gamma
    lasso = find_accepting_lasso(t.ba, lambda q: gamma[q])
    if lasso is None:
        return CheckResult(True)
    return CheckResult(False, lasso, position=1)


# -- property formulas -------------------------------------------------------

class PropertyFamily(Enum):
    P_DIAG = "p-diag"
    N_DIAG = "n-diag"
    UNBOUNDED_P_DIAG = "unbounded-p-diag"
    P_CODIAG = "p-codiag"
    N_CODIAG = "n-codiag"
    OPACITY = "opacity"
    TWO_SIDED_OPACITY = "two-sided-opacity"


_BOUNDED_FAMILIES = {PropertyFamily.P_DIAG, PropertyFamily.N_DIAG,
                     PropertyFamily.P_CODIAG, PropertyFamily.N_CODIAG}


@dataclass(frozen=True)
class PropertyKind:
    family: PropertyFamily
    prop: str
    agents: tuple[str, ...]
    delay: int | None = None

    def __post_init__(self):
        agents = (self.agents,) if isinstance(self.agents, str) else tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        if not agents:
            raise PreconditionError("at least one agent is required")
        if self.family in _BOUNDED_FAMILIES:
            if self.delay is None:
                raise PreconditionError(f"{self.family.value} needs a delay")
            if not 0 <= self.delay <= MAX_DELAY:
                raise PreconditionError(f"delay must be within 0..{MAX_DELAY}")

    @classmethod
    def p_diag(cls, delay, agent, prop):
        return cls(PropertyFamily.P_DIAG, prop, (agent,), delay)

    @classmethod
    def n_diag(cls, delay, agent, prop):
        return cls(PropertyFamily.N_DIAG, prop, (agent,), delay)

    @classmethod
    def unbounded_p_diag(cls, agent, prop):
        return cls(PropertyFamily.UNBOUNDED_P_DIAG, prop, (agent,))

    @classmethod
    def p_codiag(cls, delay, agents, prop):
        return cls(PropertyFamily.P_CODIAG, prop, tuple(agents), delay)

    @classmethod
    def n_codiag(cls, delay, agents, prop):
        return cls(PropertyFamily.N_CODIAG, prop, tuple(agents), delay)

    @classmethod
    def opacity(cls, agent, prop):
        return cls(PropertyFamily.OPACITY, prop, (agent,))

    @classmethod
    def two_sided_opacity(cls, agent, prop):
        return cls(PropertyFamily.TWO_SIDED_OPACITY, prop, (agent,))


def _iter_next(d, f):
    return IterNext(d, f) if d else f


def _iter_prev(d, f):
    return IterPrev(d, f) if d else f


def _some_agent_knows(agents, f):
    return reduce(Or, [Know(a, f) for a in agents])


def build_property_formula(kind: PropertyKind) -> Formula:
    fam = kind.family
    e = Prop(kind.prop)
    d = kind.delay
    if fam in (PropertyFamily.P_DIAG, PropertyFamily.P_CODIAG):
        return Globally(Implies(e, _iter_next(d, _some_agent_knows(kind.agents, Past(e)))))
    if fam in (PropertyFamily.N_DIAG, PropertyFamily.N_CODIAG):
        clean = Historically(Not(e))
        return _iter_next(d, Globally(Implies(
            clean, _some_agent_knows(kind.agents, _iter_prev(d, clean)))))
    if fam is PropertyFamily.UNBOUNDED_P_DIAG:
        return Globally(Implies(e, Finally(_some_agent_knows(kind.agents, Past(e)))))
    (a,) = kind.agents
    if fam is PropertyFamily.OPACITY:
        return Globally(Not(Know(a, Past(e))))
    return Globally(Not(Or(Know(a, Past(e)), Know(a, Not(Past(e))))))


def _require_hidden(vocab: Vocabulary, agent: str, prop: str):
    vocab.prop_index(prop)
    if prop in vocab.observable(agent):
        raise PreconditionError(f"proposition {prop!r} must be unobservable to agent {agent!r}")


# -- diagnosability ----------------------------------------------------------

def check_p_diagnosable_direct(system: BuchiAutomaton, agent: str, error: str,
                               delay: int) -> CheckResult:
    """Bounded P-diagnosability by searching two executions side by side.

    The first copy may be faulty and counts the steps since its first fault
    (capped at ``delay``); the second copy stays fault-free and must produce
    the same observations.  Reaching a counter of ``delay`` exhibits a fault
    the agent cannot confirm in time.
    """
    vocab = system.vocab
    _require_hidden(vocab, agent, error)
    if delay < 0:
        raise PreconditionError("delay must be nonnegative")
    s = prune_productive(system)
    if not s.accepting:
        return CheckResult(True)
    ebit = vocab.prop_bit(error)
    mask = vocab.agent_mask(agent)
    clean_by_obs: list[dict[int, list[tuple[int, int]]]] = []
    for row in s.succ:
        d: dict[int, list[tuple[int, int]]] = {}
        for letter, t in row:
            if not letter & ebit:
                d.setdefault(letter & mask, []).append((letter, t))
        clean_by_obs.append(d)

    start = (s.initial, s.initial, -1)
    parent = {start: None}
    queue = deque([start])
    bad = None
    while queue and bad is None:
        node = queue.popleft()
        q1, q2, c = node
        for l1, t1 in s.succ[q1]:
            for l2, t2 in clean_by_obs[q2].get(l1 & mask, ()):
                if c < 0:
                    c2 = 0 if l1 & ebit else -1
                else:
                    c2 = min(c + 1, delay)
                nxt = (t1, t2, c2)
                if nxt in parent:
                    continue
                parent[nxt] = (node, l1, l2)
                if c2 == delay:
                    bad = nxt
                    break
                queue.append(nxt)
            if bad is not None:
                break
    if bad is None:
        return CheckResult(True)
    w1, w2, fault_at = [], [], None
    node = bad
    while parent[node] is not None:
        prev, l1, l2 = parent[node]
        w1.append(l1)
        w2.append(l2)
        node = prev
    w1.reverse()
    w2.reverse()
    fault_at = next(i for i, l in enumerate(w1, start=1) if l & ebit)
    tail1 = find_accepting_lasso(s.rerooted(bad[0]))
    tail2 = find_accepting_lasso(s.rerooted(bad[1]))
    witness = Lasso(tuple(w1) + tail1.stem, tail1.loop)
    twin = Lasso(tuple(w2) + tail2.stem, tail2.loop)
    return CheckResult(False, witness, position=fault_at, twin=twin)


def check_diagnosable(system, agent, error, delay=None, negative=False, builder=None):
    """Model-check P-, N- or (with ``delay=None``) unbounded P-diagnosability."""
    _require_hidden(system.vocab, agent, error)
    if delay is None:
        if negative:
            raise PreconditionError("the unbounded variant is defined for P-diagnosability only")
        kind = PropertyKind.unbounded_p_diag(agent, error)
    elif negative:
        kind = PropertyKind.n_diag(delay, agent, error)
    else:
        kind = PropertyKind.p_diag(delay, agent, error)
    return model_check(system, build_property_formula(kind), builder)


def check_codiagnosable(system, error, delay, agents=None, negative=False, builder=None):
    agents = tuple(system.vocab.agent_names if agents is None else agents)
    for a in agents:
        _require_hidden(system.vocab, a, error)
    if negative:
        kind = PropertyKind.n_codiag(delay, agents, error)
    else:
        kind = PropertyKind.p_codiag(delay, agents, error)
    return model_check(system, build_property_formula(kind), builder)


# -- opacity -------------------------------------------------------------------

def _leak(t) -> CheckResult | None:
    """First reachable position >= 1 whose state outputs 1, with a lasso through it."""
    ba = t.ba
    gamma = t.gamma
    parent = {}
    queue = deque()
    for letter, q in ba.succ[ba.initial]:
        if q not in parent:
            parent[q] = (None, letter)
            queue.append(q)
    hit = None
    while queue:
        q = queue.popleft()
        if gamma[q]:
            hit = q
            break
        for letter, r in ba.succ[q]:
            if r not in parent:
                parent[r] = (q, letter)
                queue.append(r)
    if hit is None:
        return None
    letters = []
    q = hit
    while q is not None:
        prev, letter = parent[q]
        letters.append(letter)
        q = prev
    letters.reverse()
    tail = find_accepting_lasso(ba.rerooted(hit))
    return CheckResult(False, Lasso(tuple(letters) + tail.stem, tail.loop), position=len(letters))


def check_opacity(system: BuchiAutomaton, agent: str, secret: str, two_sided: bool = False,
                  builder=None) -> CheckResult:
    """Can the agent ever know that the secret occurred (or, two-sided, that it did not)?"""
    vocab = system.vocab
    _require_hidden(vocab, agent, secret)
    builder = _builder(system, builder)
    s = Prop(secret)
    formulas = [Know(agent, Past(s))]
    if two_sided:
        formulas.append(Know(agent, Not(Past(s))))
    for f in formulas:
        leak = _leak(builder.transducer(desugar(f, vocab)))
        if leak is not None:
            return leak
    return CheckResult(True)


# -- monitorability ------------------------------------------------------------

class PrefixClass(Enum):
    GOOD = "GOOD"
    BAD = "BAD"
    UGLY = "UGLY"
    INCONCLUSIVE = "INCONCLUSIVE"
    INFEASIBLE = "INFEASIBLE"

    def __str__(self):
        return self.value


@dataclass
class MonitorabilityGraph:
    """Lock-step product of the observation machine and two knowledge monitors.

    Only observation-feasible states are materialized.  ``decisive`` holds
    the states where the anchored formula or its negation is known, and
    ``can_decide`` those from which a decisive state is reachable.
    """

    obs: MooreMachine
    k_pos: object
    k_neg: object
    labels: list
    succ: tuple
    decisive: set = field(default_factory=set)
    can_decide: set = field(default_factory=set)

    @classmethod
    def build(cls, system, agent, formula, builder=None):
        builder = _builder(system, builder)
        core = desugar(anchored(formula), system.vocab)
        k1 = builder.knowledge_monitor(core, agent)
        k0 = builder.knowledge_monitor(Not(core), agent)
        obs = build_obs_dfa(system, agent, builder.budget)
        m1, m0 = k1.machine, k0.machine

        def expand(label):
            p, b1, b0 = label
            for o in obs.alphabet:
                p2 = obs.delta[p][o]
                if obs.outputs[p2]:
                    yield o, (p2, m1.delta[b1][o], m0.delta[b0][o])

        labels, succ = explore((obs.initial, m1.initial, m0.initial), expand, builder.budget)
        g = cls(obs, k1, k0, labels, succ)
        g.decisive = {i for i, (p, b1, b0) in enumerate(labels)
                      if obs.outputs[p] and (m1.outputs[b1] or m0.outputs[b0])}
        pred = [[] for _ in labels]
        for i, row in enumerate(succ):
            for _, j in row:
                pred[j].append(i)
        seen = set(g.decisive)
        queue = deque(seen)
        while queue:
            j = queue.popleft()
            for i in pred[j]:
                if i not in seen:
                    seen.add(i)
                    queue.append(i)
        g.can_decide = seen
        return g

    def locate(self, observation: Sequence[int]) -> int | None:
        """Product state reached by ``observation``, or None if infeasible."""
        node = 0
        for o in observation:
            row = dict(self.succ[node])
            if o not in row:
                if o not in self.obs.alphabet:
                    self.obs.step(self.obs.initial, o)  # raises InputError
                return None
            node = row[o]
        return node

    def ugly_prefix(self) -> tuple[int, ...] | None:
        parent = {0: None}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            if v != 0 and v not in self.can_decide:
                out = []
                while parent[v] is not None:
                    v, o = parent[v]
                    out.append(o)
                return tuple(reversed(out))
            for o, w in self.succ[v]:
                if w not in parent:
                    parent[w] = (v, o)
                    queue.append(w)
        return None


def check_monitorability(system: BuchiAutomaton, agent: str, formula: Formula,
                         builder=None) -> CheckResult:
    """Can every feasible observation prefix be extended to a decisive one?"""
    g = MonitorabilityGraph.build(system, agent, formula, builder)
    ugly = g.ugly_prefix()
    if ugly is None:
        return CheckResult(True)
    return CheckResult(False, observation=ugly)


def classify_prefix(system: BuchiAutomaton, agent: str, formula: Formula,
                    observation: Sequence[int], builder=None, graph=None) -> PrefixClass:
    g = graph or MonitorabilityGraph.build(system, agent, formula, builder)
    node = g.locate(observation)
    if node is None or (node == 0 and not g.succ[0]):
        return PrefixClass.INFEASIBLE
    _, b1, b0 = g.labels[node]
    if g.k_pos.machine.outputs[b1]:
        return PrefixClass.GOOD
    if g.k_neg.machine.outputs[b0]:
        return PrefixClass.BAD
    if node in g.can_decide:
        return PrefixClass.INCONCLUSIVE
    return PrefixClass.UGLY


# -- opacity hardness instances ------------------------------------------------

SECRET = "s"
END = "end"


@dataclass(frozen=True)
class Nfa:
    """Finite automaton over symbolic letters, possibly with several initial states."""

    alphabet: tuple[str, ...]
    num_states: int
    initial: frozenset[int]
    transitions: frozenset[tuple[int, str, int]]
    accepting: frozenset[int]

    def accepts(self, word: Sequence[str]) -> bool:
        cur = set(self.initial)
        for sym in word:
            cur = {t for q, a, t in self.transitions if q in cur and a == sym}
        return bool(cur & self.accepting)


def build_opacity_hardness_instance(nfa: Nfa, agent: str = "a") -> BuchiAutomaton:
    """System that is opaque exactly when ``nfa`` accepts every word.

    Private words ``{s} {g1} ... {gn} {end}^w`` exist for every word over the
    alphabet; public words ``{} {g1} ... {gn} {end}^w`` only for accepted ones.
    The agent sees everything except ``s``.
    """
    for reserved in (SECRET, END):
        if reserved in nfa.alphabet:
            raise VocabularyError(f"alphabet symbol {reserved!r} clashes with a reserved name")
    props = tuple(nfa.alphabet) + (END, SECRET)
    vocab = Vocabulary(props, ((agent, frozenset(nfa.alphabet) | {END}),))
    bit = {g: vocab.prop_bit(g) for g in nfa.alphabet}
    end = vocab.prop_bit(END)
    init, private, sink = 0, 1, 2
    offset = 3
    edges = [(init, vocab.prop_bit(SECRET), private), (private, end, sink), (sink, end, sink)]
    edges += [(private, bit[g], private) for g in nfa.alphabet]
    edges += [(init, 0, offset + q) for q in nfa.initial]
    edges += [(offset + q, bit[g], offset + t) for q, g, t in nfa.transitions]
    edges += [(offset + q, end, sink) for q in nfa.accepting]
    names = ["init", "private", "end"] + [f"n{q}" for q in range(nfa.num_states)]
    return BuchiAutomaton.from_edges(vocab, offset + nfa.num_states, init, edges, {sink}, names)
