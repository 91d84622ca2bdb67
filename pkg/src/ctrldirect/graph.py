"""Causal diagrams: typed nodes, directed edges, intervention indicators.

A diagram is a directed acyclic graph whose nodes carry a kind flag:
ordinary observed variables, latent variables, the (unique) outcome,
an optional selection indicator for retrospective sampling, and
intervention indicators added by :func:`augment_with_interventions`.

The line-based file format is::

    # comment
    node NAME [latent|outcome|selection|intervention]
    edge FROM TO

Blank lines are ignored and the default node kind is observed.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import GraphError, QueryError

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

SIGMA_PREFIX = "sigma_"


class NodeKind(Enum):
    OBSERVED = "observed"
    LATENT = "latent"
    OUTCOME = "outcome"
    SELECTION = "selection"
    INTERVENTION = "intervention"

    def __str__(self) -> str:
        return self.value


class CausalDag:
    """Immutable directed acyclic graph with typed nodes.

    Construction validates every structural invariant: acyclicity, edge
    endpoints, at most one selection node, childless selection node, and
    parentless single-child intervention nodes.  Instances are safe to
    share between threads; all query functions treat them as read-only.
    """

    __slots__ = ("_kinds", "_parents", "_children", "_edges")

    def __init__(
        self,
        nodes: Iterable[tuple[str, NodeKind]],
        edges: Iterable[tuple[str, str]] = (),
    ) -> None:
        kinds: dict[str, NodeKind] = {}
        for name, kind in nodes:
            if not _NAME_RE.match(name):
                raise GraphError(f"invalid node name {name!r}")
            if name in kinds:
                raise GraphError(f"duplicate node {name!r}")
            kinds[name] = NodeKind(kind)

        parents: dict[str, set[str]] = {n: set() for n in kinds}
        children: dict[str, set[str]] = {n: set() for n in kinds}
        edge_set: set[tuple[str, str]] = set()
        for a, b in edges:
            for endpoint in (a, b):
                if endpoint not in kinds:
                    raise GraphError(f"unknown edge endpoint {endpoint!r}")
            if (a, b) in edge_set:
                raise GraphError(f"duplicate edge {a} -> {b}")
            edge_set.add((a, b))
            parents[b].add(a)
            children[a].add(b)

        self._kinds = kinds
        self._parents = {n: frozenset(s) for n, s in parents.items()}
        self._children = {n: frozenset(s) for n, s in children.items()}
        self._edges = frozenset(edge_set)

        self._check_acyclic()
        self._check_kinds()

    def _check_acyclic(self) -> None:
        # Kahn's algorithm; leftovers mean a directed cycle.
        indeg = {n: len(self._parents[n]) for n in self._kinds}
        queue = deque(n for n, d in indeg.items() if d == 0)
        seen = 0
        while queue:
            n = queue.popleft()
            seen += 1
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != len(self._kinds):
            raise GraphError("cycle detected")

    def _check_kinds(self) -> None:
        selection = [n for n, k in self._kinds.items() if k is NodeKind.SELECTION]
        if len(selection) > 1:
            raise GraphError("two selection nodes: " + ", ".join(sorted(selection)))
        if selection and self._children[selection[0]]:
            raise GraphError(f"selection node {selection[0]!r} has a child")
        for n, k in self._kinds.items():
            if k is NodeKind.INTERVENTION:
                if self._parents[n]:
                    raise GraphError(f"intervention node {n!r} has a parent")
                if len(self._children[n]) != 1:
                    raise GraphError(
                        f"intervention node {n!r} must have exactly one child"
                    )

    # -- read access ---------------------------------------------------

    @property
    def node_names(self) -> frozenset[str]:
        return frozenset(self._kinds)

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def kind(self, name: str) -> NodeKind:
        self._require(name)
        return self._kinds[name]

    def parents(self, name: str) -> frozenset[str]:
        self._require(name)
        return self._parents[name]

    def children(self, name: str) -> frozenset[str]:
        self._require(name)
        return self._children[name]

    def nodes_of_kind(self, kind: NodeKind) -> frozenset[str]:
        return frozenset(n for n, k in self._kinds.items() if k is kind)

    @property
    def selection_node(self) -> str | None:
        sel = self.nodes_of_kind(NodeKind.SELECTION)
        return next(iter(sel)) if sel else None

    def has_node(self, name: str) -> bool:
        return name in self._kinds

    def _require(self, name: str) -> None:
        if name not in self._kinds:
            raise QueryError(f"unknown node {name!r}")

    def __contains__(self, name: str) -> bool:
        return name in self._kinds

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._kinds))

    def __len__(self) -> int:
        return len(self._kinds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CausalDag):
            return NotImplemented
        return self._kinds == other._kinds and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._kinds.items()), self._edges))

    def __repr__(self) -> str:
        return f"CausalDag({len(self._kinds)} nodes, {len(self._edges)} edges)"


@dataclass(frozen=True)
class DirectEffectQuery:
    """Names the exposure/mediator/outcome triple of a direct-effect contrast.

    The reference values document which contrast the effect measures
    (exposure moved ``x0 -> x1`` with the mediator held at ``m0``); they
    play no role in the graphical checks.
    """

    x: str
    m: str
    y: str
    x0: float = 0.0
    x1: float = 1.0
    m0: float = 0.0

    def validate(self, dag: CausalDag) -> None:
        if len({self.x, self.m, self.y}) != 3:
            raise QueryError("exposure, mediator and outcome must be distinct")
        for name in (self.x, self.m):
            if dag.kind(name) is not NodeKind.OBSERVED:
                raise QueryError(
                    f"{name!r} must be an observed node, got {dag.kind(name)}"
                )
        if dag.kind(self.y) is not NodeKind.OUTCOME:
            raise QueryError(f"{self.y!r} is not the outcome node")
        outcomes = dag.nodes_of_kind(NodeKind.OUTCOME)
        if outcomes != {self.y}:
            raise QueryError(
                "graph must have exactly one outcome node, found "
                + (", ".join(sorted(outcomes)) or "none")
            )

    def sigma_x(self) -> str:
        return SIGMA_PREFIX + self.x

    def sigma_m(self) -> str:
        return SIGMA_PREFIX + self.m


# -- file format -------------------------------------------------------

_KIND_TOKENS = {
    "latent": NodeKind.LATENT,
    "outcome": NodeKind.OUTCOME,
    "selection": NodeKind.SELECTION,
    "intervention": NodeKind.INTERVENTION,
}


def parse_graph(text: str) -> CausalDag:
    """Parse the line-based graph format into a validated CausalDag."""
    nodes: list[tuple[str, NodeKind]] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "node":
            if len(fields) == 2:
                nodes.append((fields[1], NodeKind.OBSERVED))
            elif len(fields) == 3:
                kind = _KIND_TOKENS.get(fields[2])
                if kind is None:
                    raise GraphError(
                        f"line {lineno}: unknown node kind {fields[2]!r}"
                    )
                nodes.append((fields[1], kind))
            else:
                raise GraphError(f"line {lineno}: expected 'node NAME [kind]'")
        elif fields[0] == "edge":
            if len(fields) != 3:
                raise GraphError(f"line {lineno}: expected 'edge FROM TO'")
            edges.append((fields[1], fields[2]))
        else:
            raise GraphError(f"line {lineno}: unknown directive {fields[0]!r}")
    return CausalDag(nodes, edges)


def serialize_graph(dag: CausalDag) -> str:
    """Canonical text form: nodes sorted by name, then sorted edges."""
    lines = []
    for name in sorted(dag.node_names):
        kind = dag.kind(name)
        if kind is NodeKind.OBSERVED:
            lines.append(f"node {name}")
        else:
            lines.append(f"node {name} {kind.value}")
    for a, b in sorted(dag.edges):
        lines.append(f"edge {a} {b}")
    return "\n".join(lines) + ("\n" if lines else "")


# -- augmentation and closures ----------------------------------------


def augment_with_interventions(dag: CausalDag, targets: Iterable[str]) -> CausalDag:
    """Return a copy with a parentless indicator node ``sigma_T -> T`` per target.

    Targets must be plain observed nodes; augmenting twice with the same
    target fails on the indicator name collision.
    """
    target_list = sorted(set(targets))
    nodes = [(n, dag.kind(n)) for n in sorted(dag.node_names)]
    edges = list(dag.edges)
    for t in target_list:
        kind = dag.kind(t)  # raises for unknown target
        if kind is not NodeKind.OBSERVED:
            raise GraphError(
                f"cannot intervene on {t!r}: node kind is {kind}, not observed"
            )
        sigma = SIGMA_PREFIX + t
        if dag.has_node(sigma):
            raise GraphError(f"intervention node name {sigma!r} already in use")
        nodes.append((sigma, NodeKind.INTERVENTION))
        edges.append((sigma, t))
    return CausalDag(nodes, edges)


def ancestors(dag: CausalDag, node: str) -> frozenset[str]:
    """Reflexive-transitive closure along incoming edges (node included)."""
    return _closure(dag, node, dag.parents)


def descendants(dag: CausalDag, node: str) -> frozenset[str]:
    """Reflexive-transitive closure along outgoing edges (node included)."""
    return _closure(dag, node, dag.children)


def _closure(dag: CausalDag, node: str, step) -> frozenset[str]:
    dag._require(node)
    out = {node}
    frontier = deque([node])
    while frontier:
        for nxt in step(frontier.popleft()):
            if nxt not in out:
                out.add(nxt)
                frontier.append(nxt)
    return frozenset(out)


def ancestors_of_set(dag: CausalDag, nodes: Iterable[str]) -> frozenset[str]:
    """Union of reflexive ancestor sets; used for collider opening."""
    out: set[str] = set()
    for n in nodes:
        out |= ancestors(dag, n)
    return frozenset(out)
