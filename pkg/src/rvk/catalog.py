"""Example systems shipped with the package."""

from __future__ import annotations

from importlib import resources

from .automata import BuchiAutomaton
from .formats import load_system
from .vocab import Vocabulary


def names() -> list[str]:
    files = resources.files(__package__).joinpath("systems")
    return sorted(p.name[:-3] for p in files.iterdir() if p.name.endswith(".rv"))


def source(name: str) -> str:
    return resources.files(__package__).joinpath("systems", f"{name}.rv").read_text()


def load(name: str) -> BuchiAutomaton:
    return load_system(source(name))[1]


def most_permissive(vocab: Vocabulary) -> BuchiAutomaton:
    """One accepting state looping on every event: the language of all words."""
    return BuchiAutomaton.from_edges(vocab, 1, 0, [(0, e, 0) for e in vocab.letters()], {0},
                                     ["all"])
