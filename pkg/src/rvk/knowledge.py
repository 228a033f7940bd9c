"""Belief-set constructions under synchronous perfect recall.

A belief is the set of transducer states reachable by some finite run over
a word the agent cannot tell apart from what it observed.  Beliefs are
materialized lazily from the initial belief, one successor per observation
letter, giving a deterministic machine over the agent's observations.

The initial state stands for the empty observation and is kept apart from
any later state with the same belief; it never accepts.  The empty belief
is an absorbing, non-accepting state flagged as infeasible: the observation
so far cannot be produced by the system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .automata import BuchiAutomaton, MooreMachine, explore, prune_productive, state_budget
from .logic import Formula


@dataclass(frozen=True, eq=False)
class KnowledgeMonitor:
    machine: MooreMachine
    beliefs: tuple[tuple[int, ...], ...]
    infeasible: frozenset[int]
    agent: str
    formula: Formula | None = None
    transducer: object = None

    def accepts(self, observation: Sequence[int]) -> bool:
        return bool(self.machine.output(observation))

    def belief(self, observation: Sequence[int]) -> tuple[int, ...]:
        return self.beliefs[self.machine.run(observation)]


def _belief_machine(ba: BuchiAutomaton, agent: str, budget: int | None):
    """Reachable belief states of ``ba`` under ``agent``'s observations.

    Returns ``(labels, succ, alphabet)``; labels are ``(is_initial, belief)``.
    """
    vocab = ba.vocab
    mask = vocab.agent_mask(agent)
    alphabet = vocab.obs_letters(agent)
    obs_succ: list[dict[int, set[int]]] = []
    for row in ba.succ:
        d: dict[int, set[int]] = {}
        for letter, t in row:
            d.setdefault(letter & mask, set()).add(t)
        obs_succ.append(d)

    def expand(label):
        _, belief = label
        for o in alphabet:
            nxt: set[int] = set()
            for q in belief:
                got = obs_succ[q].get(o)
                if got:
                    nxt |= got
            yield o, (False, frozenset(nxt))

    labels, succ = explore((True, frozenset({ba.initial})), expand, budget)
    return labels, succ, alphabet


def _machine_from(vocab, agent, labels, succ, alphabet, outputs):
    delta = tuple({letter: t for letter, t in row} for row in succ)
    names = tuple("eps" if init else "{" + ",".join(map(str, sorted(b))) + "}"
                  for init, b in labels)
    return MooreMachine(vocab, alphabet, 0, delta, tuple(outputs), names, agent)


def monitor_from_transducer(transducer, agent: str, formula: Formula | None = None,
                            budget: int | None = None) -> KnowledgeMonitor:
    """Knowledge monitor read off a (productive) transducer."""
    ba = transducer.ba
    gamma = transducer.gamma
    labels, succ, alphabet = _belief_machine(ba, agent, budget)
    outputs = [(not init) and bool(b) and all(gamma[q] for q in b) for init, b in labels]
    machine = _machine_from(ba.vocab, agent, labels, succ, alphabet, outputs)
    beliefs = tuple(tuple(sorted(b)) for _, b in labels)
    infeasible = frozenset(i for i, (_, b) in enumerate(labels) if not b)
    return KnowledgeMonitor(machine, beliefs, infeasible, agent, formula, transducer)


def build_knowledge_monitor(system: BuchiAutomaton, formula: Formula, agent: str,
                            builder=None) -> KnowledgeMonitor:
    """Machine accepting the observation prefixes after which ``agent`` knows ``formula``.

    ``formula`` must be a core formula.  Pass a ``TransducerBuilder`` to share
    intermediate constructions between calls.
    """
    from .transduce import TransducerBuilder

    builder = builder or TransducerBuilder(system)
    return builder.knowledge_monitor(formula, agent)


def build_obs_dfa(system: BuchiAutomaton, agent: str, budget: int | None = None) -> MooreMachine:
    """Machine accepting the observations of nonempty prefixes of the system language."""
    ba = prune_productive(system)
    budget = state_budget() if budget is None else budget
    labels, succ, alphabet = _belief_machine(ba, agent, budget)
    outputs = [(not init) and bool(b) for init, b in labels]
    return _machine_from(ba.vocab, agent, labels, succ, alphabet, outputs)

