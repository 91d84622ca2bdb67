"""Which estimation route does a causal diagram license for a direct effect?

Three families of graphical checks, each a d-separation query on the
intervention-augmented diagram:

* regression route: the covariate set W is independent of both
  intervention indicators, and the outcome is independent of them given
  exposure, mediator and W;
* G-estimation route: W unconfounds the exposure, Z unconfounds the
  mediator, with the corresponding outcome independencies;
* collapsibility: exposure independent of the selection indicator given
  outcome, mediator and W, so retrospective sampling leaves the
  conditional odds ratio alone.

All checks are purely graphical.  The rare-disease assumption cannot be
read off a diagram, so reports carry it as a caveat, never a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .dsep import d_separated
from .errors import GraphError, QueryError
from .graph import CausalDag, DirectEffectQuery, NodeKind

SEARCH_MAX_CANDIDATES = 16

RARE_DISEASE_CAVEAT = (
    "rare-disease assumption required for the G-estimation route; "
    "not checkable on the diagram"
)


@dataclass(frozen=True)
class ConditionResult:
    """One named independence check together with the query that decided it."""

    name: str
    holds: bool
    query: str


@dataclass(frozen=True)
class IdentificationReport:
    route: str  # "regression" | "g-estimation" | "none"
    w_set: frozenset[str]
    z_set: frozenset[str]
    conditions: tuple[ConditionResult, ...]
    caveats: tuple[str, ...] = ()

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions)


def _fmt_set(nodes: Iterable[str]) -> str:
    return "{" + ",".join(sorted(nodes)) + "}"


def _dsep_condition(
    dag: CausalDag,
    name: str,
    a: frozenset[str],
    b: frozenset[str],
    c: frozenset[str],
) -> ConditionResult:
    query = f"dsep({_fmt_set(a)}, {_fmt_set(b)} | {_fmt_set(c)})"
    if not a or not b:
        # An empty covariate set satisfies its independence requirement
        # vacuously; record it without running a degenerate query.
        return ConditionResult(name, True, query + " [vacuous]")
    return ConditionResult(name, d_separated(dag, a, b, c), query)


def _check_augmented(dag: CausalDag, query: DirectEffectQuery) -> None:
    query.validate(dag)
    for sigma in (query.sigma_x(), query.sigma_m()):
        if not dag.has_node(sigma) or dag.kind(sigma) is not NodeKind.INTERVENTION:
            raise QueryError(
                f"diagram lacks intervention indicator {sigma!r}; augment it first"
            )


def _check_disjoint(
    query: DirectEffectQuery, w: frozenset[str], z: frozenset[str] = frozenset()
) -> None:
    overlap = (w | z) & {query.x, query.m, query.y}
    if overlap:
        raise QueryError(
            "adjustment sets overlap query nodes: " + ", ".join(sorted(overlap))
        )
    both = w & z
    if both:
        raise QueryError("W and Z overlap: " + ", ".join(sorted(both)))


def check_regression_conditions(
    dag: CausalDag, query: DirectEffectQuery, w: Iterable[str]
) -> tuple[ConditionResult, ...]:
    """The two conditions under which plain outcome regression is valid."""
    _check_augmented(dag, query)
    w_set = frozenset(w)
    _check_disjoint(query, w_set)
    sigmas = frozenset({query.sigma_x(), query.sigma_m()})
    return (
        _dsep_condition(dag, "regression-covariates", w_set, sigmas, frozenset()),
        _dsep_condition(
            dag,
            "regression-outcome",
            frozenset({query.y}),
            sigmas,
            frozenset({query.x, query.m}) | w_set,
        ),
    )


def check_gcomp_conditions(
    dag: CausalDag,
    query: DirectEffectQuery,
    w: Iterable[str],
    z: Iterable[str],
) -> tuple[ConditionResult, ...]:
    """The four no-confounding conditions for the G-computation/G-estimation route."""
    _check_augmented(dag, query)
    w_set, z_set = frozenset(w), frozenset(z)
    _check_disjoint(query, w_set, z_set)
    sx = frozenset({query.sigma_x()})
    sm = frozenset({query.sigma_m()})
    y = frozenset({query.y})
    return (
        _dsep_condition(dag, "g-covariates-exposure", w_set, sx, frozenset()),
        _dsep_condition(dag, "g-covariates-mediator", z_set, sm, frozenset()),
        _dsep_condition(
            dag, "g-outcome-exposure", y, sx, frozenset({query.x}) | w_set
        ),
        _dsep_condition(
            dag,
            "g-outcome-mediator",
            y,
            sm,
            frozenset({query.x, query.m}) | z_set | w_set,
        ),
    )


def check_collapsibility(
    dag: CausalDag, query: DirectEffectQuery, w: Iterable[str]
) -> ConditionResult:
    """Exposure independent of selection given outcome, mediator and W.

    Intervention indicators never enter the conditioning set; being
    parentless single-parent sources they cannot carry a path anyway, so
    the query runs on the diagram as given.
    """
    query.validate(dag)
    w_set = frozenset(w)
    _check_disjoint(query, w_set)
    selection = dag.selection_node
    if selection is None:
        raise GraphError("no selection node in the diagram")
    return _dsep_condition(
        dag,
        "collapsibility",
        frozenset({query.x}),
        frozenset({selection}),
        frozenset({query.y, query.m}) | w_set,
    )


def _candidate_nodes(dag: CausalDag, query: DirectEffectQuery) -> list[str]:
    out = [
        n
        for n in sorted(dag.node_names)
        if dag.kind(n) is NodeKind.OBSERVED and n not in {query.x, query.m}
    ]
    if len(out) > SEARCH_MAX_CANDIDATES:
        raise GraphError(
            f"adjustment search guard exceeded: {len(out)} candidate nodes, "
            f"limit {SEARCH_MAX_CANDIDATES}"
        )
    return out


def _subsets_by_size(items: Sequence[str]):
    for size in range(len(items) + 1):
        for combo in combinations(items, size):
            yield frozenset(combo)


def search_adjustment_sets(
    dag: CausalDag, query: DirectEffectQuery
) -> IdentificationReport:
    """Enumerate candidate (W, Z) and return the first licensed route.

    Preference order: regression before G-estimation, smaller sets before
    larger, lexicographic tie-break.  When the diagram carries a selection
    node the G-estimation route additionally requires collapsibility.
    """
    _check_augmented(dag, query)
    candidates = _candidate_nodes(dag, query)
    has_selection = dag.selection_node is not None

    for w_set in _subsets_by_size(candidates):
        results = check_regression_conditions(dag, query, w_set)
        if all(r.holds for r in results):
            return IdentificationReport(
                route="regression",
                w_set=w_set,
                z_set=frozenset(),
                conditions=results,
            )

    # (W, Z) pairs ordered by total size, then |W|, then lexicographically.
    pairs = []
    for w_set in _subsets_by_size(candidates):
        rest = [n for n in candidates if n not in w_set]
        for z_set in _subsets_by_size(rest):
            pairs.append((w_set, z_set))
    pairs.sort(
        key=lambda wz: (
            len(wz[0]) + len(wz[1]),
            len(wz[0]),
            tuple(sorted(wz[0])),
            tuple(sorted(wz[1])),
        )
    )
    for w_set, z_set in pairs:
        results = list(check_gcomp_conditions(dag, query, w_set, z_set))
        if has_selection:
            results.append(check_collapsibility(dag, query, w_set))
        if all(r.holds for r in results):
            return IdentificationReport(
                route="g-estimation",
                w_set=w_set,
                z_set=z_set,
                conditions=tuple(results),
                caveats=(RARE_DISEASE_CAVEAT,),
            )

    return IdentificationReport(
        route="none", w_set=frozenset(), z_set=frozenset(), conditions=()
    )


# -- rendering ---------------------------------------------------------


def report_text(report: IdentificationReport) -> str:
    lines = [f"route: {report.route}"]
    if report.route != "none":
        lines.append(f"W = {_fmt_set(report.w_set)}")
        lines.append(f"Z = {_fmt_set(report.z_set)}")
    for c in report.conditions:
        verdict = "holds" if c.holds else "FAILS"
        lines.append(f"  {c.name}: {verdict}  [{c.query}]")
    for caveat in report.caveats:
        lines.append(f"caveat: {caveat}")
    return "\n".join(lines) + "\n"


def report_kv(report: IdentificationReport) -> str:
    lines = [
        f"route {report.route}",
        f"w {','.join(sorted(report.w_set))}",
        f"z {','.join(sorted(report.z_set))}",
    ]
    for c in report.conditions:
        lines.append(f"condition.{c.name} {str(c.holds).lower()} {c.query}")
    for caveat in report.caveats:
        lines.append(f"caveat {caveat}")
    return "\n".join(lines) + "\n"
