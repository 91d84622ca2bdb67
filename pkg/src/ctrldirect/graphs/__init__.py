"""Bundled example diagrams for the FTO / myocardial infarction study.

``names()`` lists what ships; ``load(name)`` parses one into a CausalDag
and ``path(name)`` hands back the on-disk file for CLI use.
"""

from __future__ import annotations

from importlib import resources

from ..graph import CausalDag, parse_graph

__all__ = ["names", "load", "path", "read_text"]


def names() -> list[str]:
    root = resources.files(__package__)
    return sorted(p.name[: -len(".g")] for p in root.iterdir() if p.name.endswith(".g"))


def read_text(name: str) -> str:
    try:
        return (resources.files(__package__) / f"{name}.g").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(
            f"no bundled graph {name!r}; available: {', '.join(names())}"
        ) from None


def load(name: str) -> CausalDag:
    return parse_graph(read_text(name))


def path(name: str) -> str:
    """Filesystem path of a bundled graph file (for --graph flags)."""
    p = resources.files(__package__) / f"{name}.g"
    if not p.is_file():
        raise KeyError(f"no bundled graph {name!r}; available: {', '.join(names())}")
    return str(p)
