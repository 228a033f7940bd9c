"""Propositions, agents and observations.

Events are plain ``int`` bitmasks: bit ``i`` is set iff the ``i``-th
proposition of the vocabulary holds.  An agent's observation of an event is
the mask-AND with the agent's observable set, so observation events live in
the same integer space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ParseError, VocabularyError

MAX_PROPS = 30
IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
# Words with a meaning in the formula syntax cannot name propositions.
RESERVED = frozenset(
    {"true", "false", "first", "X", "Y", "F", "G", "P", "H", "K", "W", "U", "S"}
)

Event = int


@dataclass(frozen=True)
class Vocabulary:
    props: tuple[str, ...]
    agents: tuple[tuple[str, frozenset[str]], ...] = ()
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _masks: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        props = tuple(self.props)
        agents = tuple((name, frozenset(obs)) for name, obs in self.agents)
        object.__setattr__(self, "props", props)
        object.__setattr__(self, "agents", agents)
        if len(props) > MAX_PROPS:
            raise VocabularyError(f"at most {MAX_PROPS} propositions allowed, got {len(props)}")
        for p in props:
            if not isinstance(p, str) or not IDENT.match(p):
                raise VocabularyError(f"invalid proposition name {p!r}")
            if p in RESERVED:
                raise VocabularyError(f"proposition name {p!r} is a reserved word")
        if len(set(props)) != len(props):
            raise VocabularyError("duplicate proposition names")
        index = {p: i for i, p in enumerate(props)}
        masks = {}
        for name, obs in agents:
            if not isinstance(name, str) or not IDENT.match(name):
                raise VocabularyError(f"invalid agent name {name!r}")
            if name in masks:
                raise VocabularyError(f"duplicate agent {name!r}")
            unknown = sorted(obs - index.keys())
            if unknown:
                raise VocabularyError(f"agent {name!r} observes undeclared props {unknown}")
            masks[name] = sum(1 << index[p] for p in obs)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_masks", masks)

    # -- propositions and events ------------------------------------------

    @property
    def agent_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.agents)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.props)) - 1

    def prop_index(self, p: str) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise VocabularyError(f"unknown proposition {p!r}") from None

    def prop_bit(self, p: str) -> int:
        return 1 << self.prop_index(p)

    def event(self, props: Iterable[str] = ()) -> Event:
        mask = 0
        for p in props:
            mask |= self.prop_bit(p)
        return mask

    def event_props(self, e: Event) -> tuple[str, ...]:
        self.check_event(e)
        return tuple(p for i, p in enumerate(self.props) if e >> i & 1)

    def check_event(self, e: Event) -> Event:
        if not isinstance(e, int) or e < 0 or e & ~self.full_mask:
            raise VocabularyError(f"{e!r} is not an event over {self.props}")
        return e

    def letters(self) -> tuple[Event, ...]:
        """All events, i.e. the alphabet 2^AP in mask order."""
        return tuple(range(1 << len(self.props)))

    def format_event(self, e: Event) -> str:
        return "{" + ",".join(self.event_props(e)) + "}"

    def parse_event(self, text: str) -> Event:
        s = text.strip()
        if len(s) < 2 or s[0] != "{" or s[-1] != "}":
            raise ParseError(f"event literal must look like {{p,q}}, got {text!r}")
        body = s[1:-1].strip()
        if not body:
            return 0
        names = [n.strip() for n in body.split(",")]
        if any(not n for n in names):
            raise ParseError(f"empty proposition name in {text!r}")
        return self.event(names)

    def format_word(self, word: Sequence[Event]) -> str:
        return "".join(self.format_event(e) for e in word)

    # -- agents and observation --------------------------------------------

    def agent_mask(self, agent: str) -> int:
        try:
            return self._masks[agent]
        except KeyError:
            raise VocabularyError(f"unknown agent {agent!r}") from None

    def observable(self, agent: str) -> tuple[str, ...]:
        mask = self.agent_mask(agent)
        return tuple(p for i, p in enumerate(self.props) if mask >> i & 1)

    def obs_letters(self, agent: str) -> tuple[Event, ...]:
        """The observation alphabet of ``agent``: every subset of its mask."""
        mask = self.agent_mask(agent)
        out = []
        sub = mask
        while True:
            out.append(sub)
            if sub == 0:
                break
            sub = (sub - 1) & mask
        return tuple(sorted(out))

    def obs_event(self, agent: str, e: Event) -> Event:
        return self.check_event(e) & self.agent_mask(agent)

    def obs_word(self, agent: str, word: Sequence[Event]) -> tuple[Event, ...]:
        mask = self.agent_mask(agent)
        return tuple(self.check_event(e) & mask for e in word)

    def indistinguishable(self, agent: str, u: Sequence[Event], v: Sequence[Event]) -> bool:
        return len(u) == len(v) and self.obs_word(agent, u) == self.obs_word(agent, v)

    def restrict_agents(self, agents: Iterable[str]) -> "Vocabulary":
        keep = set(agents)
        return Vocabulary(self.props, tuple(a for a in self.agents if a[0] in keep))
