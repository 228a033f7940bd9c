"""Buchi automata, generalized Buchi automata, Moore machines and lassos.

States are dense integers ``0..n-1``.  Transitions are stored as a per-state
sorted tuple of ``(letter, target)`` pairs, letters being event bitmasks.
Human-readable state names live in a side table used for witnesses and
serialization.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from .errors import InputError, ResourceError, VocabularyError
from .vocab import Vocabulary

DEFAULT_STATE_BUDGET = 200_000


def state_budget() -> int:
    """Largest number of states any single construction may materialize."""
    raw = os.environ.get("RVK_STATE_BUDGET")
    if raw is None or not raw.strip():
        return DEFAULT_STATE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ResourceError(f"RVK_STATE_BUDGET must be an integer, got {raw!r}") from None
    if value < 1:
        raise ResourceError("RVK_STATE_BUDGET must be positive")
    return value


@dataclass(frozen=True)
class Lasso:
    """The ultimately periodic word ``stem . loop^omega``."""

    stem: tuple[int, ...]
    loop: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def index(self, k: int) -> int:
        """0-based index into ``stem + loop`` of the letter at position ``k >= 1``."""
        if k < 1:
            raise ValueError("positions start at 1")
        n = len(self.stem)
        if k <= n:
            return k - 1
        return n + (k - n - 1) % len(self.loop)

    def letter(self, k: int) -> int:
        i = self.index(k)
        n = len(self.stem)
        return self.stem[i] if i < n else self.loop[i - n]

    def prefix(self, k: int) -> tuple[int, ...]:
        return tuple(self.letter(i) for i in range(1, k + 1))

    def normalized(self) -> "Lasso":
        """Same infinite word with a primitive loop and the shortest stem."""
        loop = self.loop
        n = len(loop)
        for d in range(1, n + 1):
            if n % d == 0 and loop == loop[:d] * (n // d):
                loop = loop[:d]
                break
        stem = self.stem
        while stem and stem[-1] == loop[-1]:
            stem = stem[:-1]
            loop = loop[-1:] + loop[:-1]
        return Lasso(stem, loop)


def _check_transitions(vocab, num_states, initial, succ, accepting):
    if num_states < 1:
        raise ValueError("an automaton needs at least one state")
    if not 0 <= initial < num_states:
        raise ValueError("initial state out of range")
    if len(succ) != num_states:
        raise ValueError("transition table does not cover every state")
    full = vocab.full_mask
    bad_letter = next((l for row in succ for l, _ in row if l & ~full or l < 0), None)
    if bad_letter is not None:
        raise VocabularyError(f"letter {bad_letter} outside the vocabulary")
    if any(not 0 <= t < num_states for row in succ for _, t in row):
        raise ValueError("transition target out of range")
    if any(not 0 <= q < num_states for q in accepting):
        raise ValueError("accepting state out of range")


def _normalize_succ(num_states, edges):
    rows = [set() for _ in range(num_states)]
    for q, letter, t in edges:
        rows[q].add((letter, t))
    return tuple(tuple(sorted(r)) for r in rows)


class _Graph:
    """Shared helpers for automata stored as per-state ``(letter, target)`` rows."""

    @classmethod
    def _trusted(cls, *args, names=None):
        """Construct without validation, for automata built by this package."""
        obj = object.__new__(cls)
        for f, value in zip(cls.__dataclass_fields__, args + (names,)):
            object.__setattr__(obj, f, value)
        return obj

    vocab: Vocabulary
    num_states: int
    initial: int
    succ: tuple[tuple[tuple[int, int], ...], ...]
    names: tuple[str, ...] | None

    @property
    def states(self) -> range:
        return range(self.num_states)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for q, row in enumerate(self.succ):
            for letter, t in row:
                yield q, letter, t

    def num_transitions(self) -> int:
        return sum(len(r) for r in self.succ)

    def state_name(self, q: int) -> str:
        if self.names is not None:
            return self.names[q]
        return f"q{q}"

    @cached_property
    def by_letter(self) -> tuple[dict[int, tuple[int, ...]], ...]:
        out = []
        for row in self.succ:
            d: dict[int, list[int]] = {}
            for letter, t in row:
                d.setdefault(letter, []).append(t)
            out.append({k: tuple(v) for k, v in d.items()})
        return tuple(out)

    @cached_property
    def targets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted({t for _, t in row})) for row in self.succ)

    def reachable(self, start: int | None = None) -> list[int]:
        start = self.initial if start is None else start
        seen = {start}
        order = [start]
        i = 0
        while i < len(order):
            for t in self.targets[order[i]]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        return order


@dataclass(frozen=True, eq=False)
class BuchiAutomaton(_Graph):
    vocab: Vocabulary
    num_states: int
    initial: int
    succ: tuple[tuple[tuple[int, int], ...], ...]
    accepting: frozenset[int]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        _check_transitions(self.vocab, self.num_states, self.initial, self.succ, self.accepting)
        if self.names is not None and len(self.names) != self.num_states:
            raise ValueError("one name per state required")

    @classmethod
    def from_edges(cls, vocab, num_states, initial, edges, accepting, names=None):
        return cls(vocab, num_states, initial, _normalize_succ(num_states, edges),
                   frozenset(accepting), None if names is None else tuple(names))

    def rerooted(self, q: int) -> "BuchiAutomaton":
        if not 0 <= q < self.num_states:
            raise ValueError("state out of range")
        return BuchiAutomaton._trusted(self.vocab, self.num_states, q, self.succ, self.accepting,
                                       names=self.names)

    def __repr__(self):
        return (f"BuchiAutomaton(states={self.num_states}, transitions={self.num_transitions()}, "
                f"accepting={len(self.accepting)})")


@dataclass(frozen=True, eq=False)
class GeneralizedBuchiAutomaton(_Graph):
    vocab: Vocabulary
    num_states: int
    initial: int
    succ: tuple[tuple[tuple[int, int], ...], ...]
    accepting_sets: tuple[frozenset[int], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        family = tuple(frozenset(f) for f in self.accepting_sets)
        if not family:
            family = (frozenset(range(self.num_states)),)
        object.__setattr__(self, "accepting_sets", family)
        _check_transitions(self.vocab, self.num_states, self.initial, self.succ,
                           frozenset().union(*family))

    @classmethod
    def from_edges(cls, vocab, num_states, initial, edges, accepting_sets, names=None):
        return cls(vocab, num_states, initial, _normalize_succ(num_states, edges),
                   tuple(frozenset(f) for f in accepting_sets),
                   None if names is None else tuple(names))


def canonical_empty(vocab: Vocabulary) -> BuchiAutomaton:
    return BuchiAutomaton(vocab, 1, 0, ((),), frozenset(), ("empty",))


def explore(initial: Hashable, expand: Callable[[Hashable], Iterable[tuple[int, Hashable]]],
            budget: int | None = None):
    """Breadth-first materialization of an implicitly given automaton.

    Returns ``(labels, succ)`` where ``labels[i]`` is the label of state ``i``
    (the initial label gets id 0) and ``succ`` is in the row format used by
    the automaton classes.
    """
    budget = state_budget() if budget is None else budget
    ids = {initial: 0}
    labels = [initial]
    succ = []
    lookup = ids.get
    i = 0
    while i < len(labels):
        row = set()
        for letter, nxt in expand(labels[i]):
            j = lookup(nxt)
            if j is None:
                j = len(labels)
                if j >= budget:
                    raise ResourceError(f"state budget of {budget} states exceeded")
                ids[nxt] = j
                labels.append(nxt)
            row.add((letter, j))
        succ.append(tuple(sorted(row)))
        i += 1
    return labels, tuple(succ)


def strongly_connected_components(num_nodes: int, adj: Sequence[Sequence[int]],
                                  roots: Iterable[int] = (0,)) -> tuple[list[int], list[list[int]]]:
    """Iterative Tarjan over the nodes reachable from ``roots``.

    Returns ``(comp, comps)``: ``comp[v]`` is the component index of ``v``
    (-1 if unreached) and ``comps`` lists components in the order found.
    """
    index = [-1] * num_nodes
    low = [0] * num_nodes
    on_stack = [False] * num_nodes
    comp = [-1] * num_nodes
    comps: list[list[int]] = []
    stack: list[int] = []
    counter = 0
    for root in roots:
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            nbrs = adj[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                members = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = len(comps)
                    members.append(w)
                    if w == v:
                        break
                comps.append(members)
    return comp, comps


def _cyclic_components(adj, comp, comps):
    """Indices of components containing at least one internal edge."""
    cyclic = set()
    for c, members in enumerate(comps):
        if len(members) > 1:
            cyclic.add(c)
        else:
            v = members[0]
            if v in adj[v]:
                cyclic.add(c)
    return cyclic


def _accepting_cycle_states(a: BuchiAutomaton) -> tuple[set[int], list[int]]:
    adj = a.targets
    comp, comps = strongly_connected_components(a.num_states, adj, (a.initial,))
    cyclic = _cyclic_components(adj, comp, comps)
    good = {q for q in a.accepting if comp[q] in cyclic}
    return good, comp


def prune_with_map(a: BuchiAutomaton) -> tuple[BuchiAutomaton, list[int]]:
    """``prune_productive`` that also returns ``kept`` with ``kept[new] = old``."""
    adj = a.targets
    comp, comps = strongly_connected_components(a.num_states, adj, (a.initial,))
    cyclic = _cyclic_components(adj, comp, comps)
    good = [q for q in a.accepting if comp[q] in cyclic]
    pred: list[list[int]] = [[] for _ in range(a.num_states)]
    for q in range(a.num_states):
        if comp[q] != -1:
            for t in adj[q]:
                pred[t].append(q)
    productive = [False] * a.num_states
    for q in good:
        productive[q] = True
    queue = list(good)
    while queue:
        q = queue.pop()
        for p in pred[q]:
            if not productive[p]:
                productive[p] = True
                queue.append(p)
    if not productive[a.initial]:
        return canonical_empty(a.vocab), [a.initial]
    keep = [q for q in range(a.num_states) if productive[q]]
    new_id = {q: i for i, q in enumerate(keep)}
    succ = tuple(tuple((letter, new_id[t]) for letter, t in a.succ[q] if productive[t]) for q in keep)
    names = None if a.names is None else tuple(a.names[q] for q in keep)
    pruned = BuchiAutomaton._trusted(a.vocab, len(keep), new_id[a.initial], succ,
                                     frozenset(new_id[q] for q in a.accepting if productive[q]),
                                     names=names)
    return pruned, keep


def prune_productive(a: BuchiAutomaton) -> BuchiAutomaton:
    """Drop unreachable states and states with no accepting continuation."""
    return prune_with_map(a)[0]


def is_empty(a: BuchiAutomaton) -> bool:
    return not _accepting_cycle_states(a)[0]


def degeneralize(g: GeneralizedBuchiAutomaton, budget: int | None = None):
    """Counter construction.  Returns ``(ba, state_map)``.

    Sets covering every state constrain nothing and are dropped, as are
    repeated sets; the counter advances when leaving a state of the set it is
    waiting for.
    """
    everything = frozenset(range(g.num_states))
    family = []
    for f in g.accepting_sets:
        if f != everything and f not in family:
            family.append(f)
    if not family:
        family = [everything]
    if len(family) == 1:
        ba = BuchiAutomaton._trusted(g.vocab, g.num_states, g.initial, g.succ, family[0],
                                     names=g.names)
        return ba, list(range(g.num_states))
    m = len(family)

    def expand(label):
        q, i = label
        j = (i + 1) % m if q in family[i] else i
        for letter, t in g.succ[q]:
            yield letter, (t, j)

    labels, succ = explore((g.initial, 0), expand, budget)
    accepting = frozenset(n for n, (q, i) in enumerate(labels) if i == 0 and q in family[0])
    names = None
    if g.names is not None:
        names = tuple(f"{g.names[q]}#{i}" for q, i in labels)
    ba = BuchiAutomaton._trusted(g.vocab, len(labels), 0, succ, accepting, names=names)
    return ba, [q for q, _ in labels]


def _bfs_path(adj_letters, sources, is_target):
    """Shortest path search.  ``sources`` are ``(letter_or_None, node)`` pairs.

    Returns ``(letters, nodes)`` along the path to the first target found,
    ``nodes`` including the source node.  Letters of sources are prepended.
    """
    parent = {}
    queue = deque()
    for letter, node in sources:
        if node in parent:
            continue
        parent[node] = (None, letter)
        if is_target(node):
            return _unwind(parent, node)
        queue.append(node)
    while queue:
        v = queue.popleft()
        for letter, w in adj_letters(v):
            if w in parent:
                continue
            parent[w] = (v, letter)
            if is_target(w):
                return _unwind(parent, w)
            queue.append(w)
    return None


def _unwind(parent, node):
    letters = []
    nodes = [node]
    while True:
        prev, letter = parent[node]
        if letter is not None:
            letters.append(letter)
        if prev is None:
            break
        nodes.append(prev)
        node = prev
    letters.reverse()
    nodes.reverse()
    return letters, nodes


def _cycle_through(adj_letters, node, same_component):
    """Shortest nonempty cycle from ``node`` back to itself."""
    sources = [(letter, w) for letter, w in adj_letters(node) if same_component(w)]
    found = _bfs_path(lambda v: ((l, w) for l, w in adj_letters(v) if same_component(w)),
                      sources, lambda w: w == node)
    return found


def find_accepting_lasso(a: BuchiAutomaton,
                         first_state_filter: Callable[[int], bool] | None = None) -> Lasso | None:
    """An accepted lasso, or None when the (filtered) language is empty.

    With ``first_state_filter`` the run must be in an admissible state after
    the first letter; the search then starts from the filtered successors of
    the initial state.
    """
    good, comp = _accepting_cycle_states(a)
    if not good:
        return None
    adj = lambda v: a.succ[v]
    if first_state_filter is None:
        sources = [(None, a.initial)]
    else:
        sources = [(letter, t) for letter, t in a.succ[a.initial] if first_state_filter(t)]
    found = _bfs_path(adj, sources, lambda v: v in good)
    if found is None:
        return None
    stem, nodes = found
    f = nodes[-1]
    cycle = _cycle_through(adj, f, lambda w: comp[w] == comp[f])
    assert cycle is not None
    return Lasso(tuple(stem), tuple(cycle[0]))


def _lasso_product(a: BuchiAutomaton, lasso: Lasso):
    """Explicit product of ``a`` with the positions of ``lasso``.

    Node ``(q, i)`` means: in state ``q`` about to read letter ``i`` of
    ``stem + loop``.  Returns ``(nodes, ids, adj_letters, succ_ids)``.
    """
    word = lasso.stem + lasso.loop
    n = len(word)
    start = len(lasso.stem)

    def nxt(i):
        return i + 1 if i + 1 < n else start

    nodes = [(a.initial, 0)]
    ids = {nodes[0]: 0}
    adj = []
    k = 0
    while k < len(nodes):
        q, i = nodes[k]
        row = []
        for t in a.by_letter[q].get(word[i], ()):
            node = (t, nxt(i))
            j = ids.get(node)
            if j is None:
                j = len(nodes)
                ids[node] = j
                nodes.append(node)
            row.append((word[i], j))
        adj.append(row)
        k += 1
    return nodes, adj


def _lasso_accepting_nodes(a, nodes, adj):
    plain = [[j for _, j in row] for row in adj]
    comp, comps = strongly_connected_components(len(nodes), plain, (0,))
    cyclic = _cyclic_components(plain, comp, comps)
    good = {v for v, (q, _) in enumerate(nodes) if q in a.accepting and comp[v] in cyclic}
    return good, comp


def accepts_lasso(a: BuchiAutomaton, lasso: Lasso) -> bool:
    nodes, adj = _lasso_product(a, lasso)
    good, _ = _lasso_accepting_nodes(a, nodes, adj)
    return bool(good)


def accepting_run(a: BuchiAutomaton, lasso: Lasso, length: int,
                  first_state_filter: Callable[[int], bool] | None = None) -> list[int] | None:
    """States ``pi(0..length)`` of an accepting run of ``a`` over ``lasso``."""
    nodes, adj = _lasso_product(a, lasso)
    good, comp = _lasso_accepting_nodes(a, nodes, adj)
    if not good:
        return None
    step = lambda v: adj[v]
    if first_state_filter is None:
        sources = [(None, 0)]
    else:
        sources = [(l, w) for l, w in adj[0] if first_state_filter(nodes[w][0])]
    found = _bfs_path(step, sources, lambda v: v in good)
    if found is None:
        return None
    _, path = found
    if first_state_filter is not None:
        path = [0] + path
    f = path[-1]
    cycle = _cycle_through(step, f, lambda w: comp[w] == comp[f])
    _, cyc_nodes = cycle
    # cyc_nodes starts at the first successor of f and ends at f
    run = list(path)
    while len(run) <= length:
        run.extend(cyc_nodes)
    return [nodes[v][0] for v in run[: length + 1]]


# -- Moore machines ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MooreMachine:
    """Deterministic, total machine over a declared alphabet of letters."""

    vocab: Vocabulary
    alphabet: tuple[int, ...]
    initial: int
    delta: tuple[dict, ...]
    outputs: tuple
    names: tuple[str, ...] | None = None
    agent: str | None = None

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        object.__setattr__(self, "alphabet", alphabet)
        n = len(self.delta)
        if n < 1 or len(self.outputs) != n:
            raise ValueError("one output per state required")
        if not 0 <= self.initial < n:
            raise ValueError("initial state out of range")
        letters = set(alphabet)
        for row in self.delta:
            if set(row) != letters:
                raise ValueError("transition function must be total on the alphabet")
            for t in row.values():
                if not 0 <= t < n:
                    raise ValueError("transition target out of range")

    @property
    def num_states(self) -> int:
        return len(self.delta)

    def state_name(self, q: int) -> str:
        return self.names[q] if self.names is not None else f"m{q}"

    def step(self, q: int, letter: int) -> int:
        try:
            return self.delta[q][letter]
        except KeyError:
            raise InputError(f"letter {letter!r} is not in the machine's alphabet") from None

    def run(self, word: Iterable[int]) -> int:
        q = self.initial
        for letter in word:
            q = self.step(q, letter)
        return q

    def output(self, word: Iterable[int]):
        return self.outputs[self.run(word)]

    def reachable(self) -> list[int]:
        seen = {self.initial}
        order = [self.initial]
        i = 0
        while i < len(order):
            for letter in self.alphabet:
                t = self.delta[order[i]][letter]
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        return order


def moore_output(m: MooreMachine, u: Iterable[int]):
    return m.output(u)
