"""Three-valued runtime monitors, diagnosers and online sessions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .automata import BuchiAutomaton, MooreMachine, explore
from .errors import PreconditionError
from .knowledge import KnowledgeMonitor
from .logic import Formula, Not, Past, Prop, anchored, desugar


class Verdict(Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    UNKNOWN = "UNKNOWN"
    INFEASIBLE = "INFEASIBLE"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class RuntimeMonitor:
    machine: MooreMachine
    agent: str
    formula: Formula | None = None

    def verdict(self, observation: Sequence[int]) -> Verdict:
        return self.machine.output(observation)

    def session(self) -> "MonitorSession":
        return start_session(self.machine)


def _builder(system, builder):
    from .transduce import TransducerBuilder

    return builder or TransducerBuilder(system)


def product_monitor(k_pos: KnowledgeMonitor, k_neg: KnowledgeMonitor, budget=None) -> MooreMachine:
    """Verdict machine of the lock-step product of two knowledge monitors."""
    m1, m0 = k_pos.machine, k_neg.machine
    alphabet = m1.alphabet

    def expand(label):
        b1, b0 = label
        for o in alphabet:
            yield o, (m1.delta[b1][o], m0.delta[b0][o])

    labels, succ = explore((m1.initial, m0.initial), expand, budget)
    outputs = []
    for b1, b0 in labels:
        if b1 in k_pos.infeasible or b0 in k_neg.infeasible:
            outputs.append(Verdict.INFEASIBLE)
        elif m1.outputs[b1] and m0.outputs[b0]:
            raise AssertionError("a belief cannot force both a formula and its negation")
        elif m1.outputs[b1]:
            outputs.append(Verdict.TRUE)
        elif m0.outputs[b0]:
            outputs.append(Verdict.FALSE)
        else:
            outputs.append(Verdict.UNKNOWN)
    delta = tuple({o: t for o, t in row} for row in succ)
    names = tuple(f"m{i}" for i in range(len(labels)))
    return MooreMachine(m1.vocab, alphabet, 0, delta, tuple(outputs), names, k_pos.agent)


def synthesize_monitor(system: BuchiAutomaton, agent: str, formula: Formula,
                       builder=None) -> RuntimeMonitor:
    """Monitor reporting whether the whole execution satisfies ``formula``.

    TRUE once the agent knows the formula held from the start, FALSE once it
    knows it failed, UNKNOWN otherwise, INFEASIBLE off the system's
    observations.
    """
    builder = _builder(system, builder)
    core = desugar(anchored(formula), system.vocab)
    k1 = builder.knowledge_monitor(core, agent)
    k0 = builder.knowledge_monitor(Not(core), agent)
    return RuntimeMonitor(product_monitor(k1, k0, builder.budget), agent, formula)


def synthesize_diagnoser(system: BuchiAutomaton, agent: str, error: str,
                         builder=None) -> KnowledgeMonitor:
    """Knowledge monitor for "the error has occurred"."""
    vocab = system.vocab
    if error in vocab.observable(agent):
        raise PreconditionError(f"error proposition {error!r} must be unobservable to {agent!r}")
    vocab.prop_index(error)
    builder = _builder(system, builder)
    return builder.knowledge_monitor(desugar(Past(Prop(error)), vocab), agent)


def verdict_machine(k: KnowledgeMonitor) -> MooreMachine:
    """A knowledge monitor as a verdict machine: TRUE when it accepts.

    Not knowing yet is UNKNOWN rather than FALSE, so that a session does not
    latch on it (a diagnoser may raise its alarm later).
    """
    m = k.machine
    outputs = tuple(Verdict.INFEASIBLE if q in k.infeasible else
                    Verdict.TRUE if m.outputs[q] else Verdict.UNKNOWN
                    for q in range(m.num_states))
    return MooreMachine(m.vocab, m.alphabet, m.initial, m.delta, outputs, m.names, m.agent)


# -- online sessions -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MonitorSession:
    machine: MooreMachine
    state: int
    steps: int = 0
    latched: Verdict | None = None

    @property
    def verdict(self) -> Verdict:
        if self.latched is not None:
            return self.latched
        return self.machine.outputs[self.state]


def start_session(machine: MooreMachine) -> MonitorSession:
    return MonitorSession(machine, machine.initial)


def step(session: MonitorSession, o: int) -> tuple[MonitorSession, Verdict]:
    """Advance by one observation.

    TRUE and FALSE latch; INFEASIBLE latches and overrides them, since an
    observation the system cannot produce invalidates every later verdict.
    """
    if session.latched is Verdict.INFEASIBLE:
        session.machine.step(session.state, o)  # still reject foreign letters
        return replace(session, steps=session.steps + 1), Verdict.INFEASIBLE
    nxt = session.machine.step(session.state, o)
    out = session.machine.outputs[nxt]
    latched = session.latched
    if out is Verdict.INFEASIBLE:
        latched = Verdict.INFEASIBLE
    elif latched is None and out in (Verdict.TRUE, Verdict.FALSE):
        latched = out
    verdict = latched if latched is not None else out
    return MonitorSession(session.machine, nxt, session.steps + 1, latched), verdict


def run_trace(machine: MooreMachine, observations: Iterable[int]) -> list[Verdict]:
    session = start_session(machine)
    out = []
    for o in observations:
        session, v = step(session, o)
        out.append(v)
    return out


def run_decentralized(system: BuchiAutomaton, error: str, trace: Sequence[int],
                      agents: Sequence[str] | None = None, builder=None) -> list[Verdict]:
    """Per-step disjunction of the agents' local diagnoser verdicts."""
    vocab = system.vocab
    agents = list(vocab.agent_names if agents is None else agents)
    if not agents:
        raise PreconditionError("at least one agent is required")
    builder = _builder(system, builder)
    local = [synthesize_diagnoser(system, a, error, builder) for a in agents]
    masks = [vocab.agent_mask(a) for a in agents]
    states = [k.machine.initial for k in local]
    out = []
    for e in trace:
        vocab.check_event(e)
        states = [k.machine.step(q, e & mask) for k, q, mask in zip(local, states, masks)]
        if any(q in k.infeasible for k, q in zip(local, states)):
            out.append(Verdict.INFEASIBLE)
        elif any(k.machine.outputs[q] for k, q in zip(local, states)):
            out.append(Verdict.TRUE)
        else:
            out.append(Verdict.FALSE)
    return out
