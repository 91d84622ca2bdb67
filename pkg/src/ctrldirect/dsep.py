"""Path blocking and d-separation queries on causal diagrams.

``d_separated`` runs a linear-time reachability sweep over
(node, travel direction) states, opening colliders through the reflexive
ancestor closure of the conditioning set.  ``enumerate_paths`` plus
``path_blocked`` give the brute-force oracle the test suite checks the
sweep against.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

from .errors import QueryError
from .graph import CausalDag, ancestors_of_set, descendants

PATH_ENUMERATION_MAX_NODES = 16

# Travel direction of the reachability state: arrived at a node along an
# edge pointing into it (downstream) or out of it (upstream).
_DOWN = 0
_UP = 1


def _check_path(dag: CausalDag, path: Sequence[str]) -> None:
    if len(path) < 2:
        raise QueryError("invalid path: fewer than two nodes")
    if len(set(path)) != len(path):
        raise QueryError("invalid path: repeated node")
    for name in path:
        dag._require(name)
    for a, b in zip(path, path[1:]):
        if (a, b) not in dag.edges and (b, a) not in dag.edges:
            raise QueryError(f"invalid path: {a} and {b} are not adjacent")


def is_collider(dag: CausalDag, path: Sequence[str], index: int) -> bool:
    """True iff both path edges at ``index`` point into ``path[index]``."""
    _check_path(dag, path)
    if not 1 <= index <= len(path) - 2:
        raise QueryError(f"index {index} is not interior to a path of length {len(path)}")
    mid = path[index]
    return (path[index - 1], mid) in dag.edges and (path[index + 1], mid) in dag.edges


def path_blocked(dag: CausalDag, path: Sequence[str], conditioning: Iterable[str]) -> bool:
    """Decide whether ``conditioning`` blocks the given path.

    Blocked means some interior non-collider is conditioned on, or some
    interior collider has no conditioned descendant (descendants taken
    reflexively, so conditioning on the collider itself opens it).
    """
    _check_path(dag, path)
    cond = frozenset(conditioning)
    for name in cond:
        dag._require(name)
    for i in range(1, len(path) - 1):
        mid = path[i]
        if is_collider(dag, path, i):
            if not (descendants(dag, mid) & cond):
                return True
        elif mid in cond:
            return True
    return False


def d_separated(
    dag: CausalDag,
    a: Iterable[str],
    b: Iterable[str],
    c: Iterable[str] = (),
) -> bool:
    """True iff every path between the sets ``a`` and ``b`` is blocked by ``c``."""
    a_set, b_set, c_set = frozenset(a), frozenset(b), frozenset(c)
    return not _reachable(dag, a_set, b_set, c_set)


def d_connected(
    dag: CausalDag,
    a: Iterable[str],
    b: Iterable[str],
    c: Iterable[str] = (),
) -> bool:
    return not d_separated(dag, a, b, c)


def _check_query_sets(
    dag: CausalDag, a: frozenset[str], b: frozenset[str], c: frozenset[str]
) -> None:
    if not a or not b:
        raise QueryError("query sets a and b must be nonempty")
    for name in a | b | c:
        dag._require(name)
    overlap = (a & b) | (a & c) | (b & c)
    if overlap:
        raise QueryError("overlapping query sets: " + ", ".join(sorted(overlap)))


def _reachable(
    dag: CausalDag, a: frozenset[str], b: frozenset[str], c: frozenset[str]
) -> bool:
    """Does an active path reach some node of b from a, conditioning on c?"""
    _check_query_sets(dag, a, b, c)
    collider_openers = ancestors_of_set(dag, c)

    # Start states behave as if the source were entered from below, which
    # permits leaving through parents and children alike.
    queue: deque[tuple[str, int]] = deque((s, _UP) for s in a)
    visited: set[tuple[str, int]] = set(queue)
    while queue:
        node, direction = queue.popleft()
        if node in b:
            return True
        moves: list[tuple[str, int]] = []
        if direction == _UP:
            if node not in c:
                moves += [(p, _UP) for p in dag.parents(node)]
                moves += [(ch, _DOWN) for ch in dag.children(node)]
        else:
            if node not in c:
                moves += [(ch, _DOWN) for ch in dag.children(node)]
            if node in collider_openers:
                moves += [(p, _UP) for p in dag.parents(node)]
        for state in moves:
            if state not in visited:
                visited.add(state)
                queue.append(state)
    return False


def enumerate_paths(dag: CausalDag, a: str, b: str) -> list[tuple[str, ...]]:
    """All simple paths between two nodes, in depth-first lexicographic order.

    Guarded to small graphs; this is the testing oracle, not the primary
    d-separation routine.
    """
    if len(dag) > PATH_ENUMERATION_MAX_NODES:
        raise QueryError(
            f"path enumeration guard exceeded: graph has {len(dag)} nodes, "
            f"limit {PATH_ENUMERATION_MAX_NODES}"
        )
    dag._require(a)
    dag._require(b)
    if a == b:
        raise QueryError("path endpoints must differ")

    paths: list[tuple[str, ...]] = []
    trail = [a]
    on_trail = {a}

    def extend(node: str) -> None:
        for nxt in sorted(dag.parents(node) | dag.children(node)):
            if nxt in on_trail:
                continue
            trail.append(nxt)
            if nxt == b:
                paths.append(tuple(trail))
            else:
                on_trail.add(nxt)
                extend(nxt)
                on_trail.discard(nxt)
            trail.pop()

    extend(a)
    return paths


def find_open_path(
    dag: CausalDag,
    a: Iterable[str],
    b: Iterable[str],
    c: Iterable[str] = (),
) -> tuple[str, ...] | None:
    """Return one path left open by ``c``, or None when d-separated.

    Depth-first search over simple paths, pruning a branch as soon as an
    interior node is determined and locally closed.  Only used to produce
    a human-readable witness; the boolean answer comes from d_separated.
    """
    a_set, b_set, c_set = frozenset(a), frozenset(b), frozenset(c)
    _check_query_sets(dag, a_set, b_set, c_set)
    collider_openers = ancestors_of_set(dag, c_set)

    def locally_open(prev: str, mid: str, nxt: str) -> bool:
        if (prev, mid) in dag.edges and (nxt, mid) in dag.edges:
            return mid in collider_openers
        return mid not in c_set

    trail: list[str] = []
    on_trail: set[str] = set()

    def extend(node: str) -> tuple[str, ...] | None:
        for nxt in sorted(dag.parents(node) | dag.children(node)):
            if nxt in on_trail:
                continue
            if len(trail) >= 2 and not locally_open(trail[-2], node, nxt):
                continue
            if nxt in b_set:
                return tuple(trail + [nxt])
            trail.append(nxt)
            on_trail.add(nxt)
            found = extend(nxt)
            trail.pop()
            on_trail.discard(nxt)
            if found:
                return found
        return None

    for start in sorted(a_set):
        trail = [start]
        on_trail = {start}
        found = extend(start)
        if found:
            return found
    return None


def render_path(dag: CausalDag, path: Sequence[str]) -> str:
    """Format a path with its arrow directions, e.g. ``A -> B <- C``."""
    parts = [path[0]]
    for a, b in zip(path, path[1:]):
        parts.append("->" if (a, b) in dag.edges else "<-")
        parts.append(b)
    return " ".join(parts)
