"""Identification route checks: worked examples and search behavior."""

import numpy as np
import pytest

from ctrldirect import (
    DirectEffectQuery,
    GraphError,
    QueryError,
    augment_with_interventions,
    check_collapsibility,
    check_gcomp_conditions,
    check_regression_conditions,
    parse_graph,
    search_adjustment_sets,
)
from ctrldirect.identify import report_kv, report_text
from conftest import random_dag

QUERY = DirectEffectQuery(x="GENO", m="BMI", y="MI")


def all_hold(results):
    return all(r.holds for r in results)


class TestRegressionConditions:
    @pytest.mark.parametrize("w", [set(), {"DEMO"}])
    def test_outcome_condition_fails_without_behave(self, augmented_dag, w):
        results = check_regression_conditions(augmented_dag, QUERY, w)
        assert results[0].holds
        assert not results[1].holds

    @pytest.mark.parametrize("w", [{"BEHAVE"}, {"BEHAVE", "DEMO"}])
    def test_covariate_condition_fails_with_behave(self, augmented_dag, w):
        results = check_regression_conditions(augmented_dag, QUERY, w)
        assert not results[0].holds

    def test_no_w_makes_regression_work(self, augmented_dag):
        for w in [set(), {"DEMO"}, {"BEHAVE"}, {"BEHAVE", "DEMO"}]:
            assert not all_hold(check_regression_conditions(augmented_dag, QUERY, w))

    def test_trivial_unconfounded_graph(self):
        dag = parse_graph("node X\nnode M\nnode Y outcome\nedge X Y")
        aug = augment_with_interventions(dag, ["X", "M"])
        q = DirectEffectQuery(x="X", m="M", y="Y")
        assert all_hold(check_regression_conditions(aug, q, set()))

    def test_unaugmented_graph_rejected(self, cohort_dag):
        with pytest.raises(QueryError, match="augment"):
            check_regression_conditions(cohort_dag, QUERY, set())

    def test_w_overlapping_query_rejected(self, augmented_dag):
        with pytest.raises(QueryError, match="overlap"):
            check_regression_conditions(augmented_dag, QUERY, {"GENO"})


class TestGComputationConditions:
    def test_demo_behave_passes_all_four(self, augmented_dag):
        results = check_gcomp_conditions(augmented_dag, QUERY, {"DEMO"}, {"BEHAVE"})
        assert [r.holds for r in results] == [True, True, True, True]

    def test_empty_z_fails_fourth(self, augmented_dag):
        results = check_gcomp_conditions(augmented_dag, QUERY, {"DEMO"}, set())
        assert [r.holds for r in results] == [True, True, True, False]

    def test_trivial_graph_all_hold_with_empty_sets(self):
        dag = parse_graph(
            "node X\nnode M\nnode Y outcome\nedge X M\nedge X Y\nedge M Y"
        )
        aug = augment_with_interventions(dag, ["X", "M"])
        q = DirectEffectQuery(x="X", m="M", y="Y")
        assert all_hold(check_gcomp_conditions(aug, q, set(), set()))

    def test_w_z_overlap_rejected(self, augmented_dag):
        with pytest.raises(QueryError, match="overlap"):
            check_gcomp_conditions(augmented_dag, QUERY, {"DEMO"}, {"DEMO"})


class TestCollapsibility:
    def test_holds_on_matched_graph_with_demo(self, matched_dag):
        result = check_collapsibility(matched_dag, QUERY, {"DEMO"})
        assert result.holds

    def test_exposure_arrow_into_selection_breaks_it(self, matched_dag):
        from ctrldirect import serialize_graph

        variant = parse_graph(serialize_graph(matched_dag) + "edge GENO S\n")
        assert not check_collapsibility(variant, QUERY, {"DEMO"}).holds

    def test_parentless_selection_trivially_holds(self):
        dag = parse_graph(
            "node X\nnode M\nnode Y outcome\nnode S selection\nedge X Y"
        )
        q = DirectEffectQuery(x="X", m="M", y="Y")
        for w in (set(), frozenset()):
            assert check_collapsibility(dag, q, w).holds

    def test_requires_selection_node(self, cohort_dag):
        with pytest.raises(GraphError, match="selection"):
            check_collapsibility(cohort_dag, QUERY, set())


class TestSearch:
    def test_matched_graph_finds_g_route(self, matched_dag):
        aug = augment_with_interventions(matched_dag, ["GENO", "BMI"])
        report = search_adjustment_sets(aug, QUERY)
        assert report.route == "g-estimation"
        assert report.w_set == {"DEMO"}
        assert report.z_set == {"BEHAVE"}
        assert report.condition("collapsibility").holds
        assert any("rare-disease" in c for c in report.caveats)

    def test_cohort_graph_skips_collapsibility(self, augmented_dag):
        report = search_adjustment_sets(augmented_dag, QUERY)
        assert report.route == "g-estimation"
        assert report.w_set == {"DEMO"}
        assert report.z_set == {"BEHAVE"}
        with pytest.raises(KeyError):
            report.condition("collapsibility")

    def test_trivial_graph_prefers_regression_with_empty_w(self):
        dag = parse_graph("node X\nnode M\nnode Y outcome\nedge X Y")
        aug = augment_with_interventions(dag, ["X", "M"])
        report = search_adjustment_sets(aug, DirectEffectQuery(x="X", m="M", y="Y"))
        assert report.route == "regression"
        assert report.w_set == frozenset()

    def test_route_none_when_nothing_works(self):
        # Latent confounder of both X and Y with nothing observed to block it.
        dag = parse_graph(
            "node X\nnode M\nnode Y outcome\nnode U latent\n"
            "edge U X\nedge U Y\nedge X M\nedge M Y\nedge X Y"
        )
        aug = augment_with_interventions(dag, ["X", "M"])
        report = search_adjustment_sets(aug, DirectEffectQuery(x="X", m="M", y="Y"))
        assert report.route == "none"

    def test_returned_sets_reverify(self):
        rng = np.random.default_rng(77)
        verified = 0
        for _ in range(40):
            dag = random_dag(rng, max_nodes=7, max_edges=10, latent_prob=0.25)
            observed = sorted(
                n for n in dag.node_names if dag.kind(n).value == "observed"
            )
            if len(observed) < 3:
                continue
            x, m, y = observed[0], observed[1], observed[2]
            base = parse_graph(
                "\n".join(
                    [f"node {n}" if n != y else f"node {n} outcome" for n in dag.node_names if dag.kind(n).value == "observed"]
                    + [f"node {n} latent" for n in dag.node_names if dag.kind(n).value == "latent"]
                    + [f"edge {a} {b}" for a, b in sorted(dag.edges)]
                )
            )
            q = DirectEffectQuery(x=x, m=m, y=y)
            aug = augment_with_interventions(base, [x, m])
            report = search_adjustment_sets(aug, q)
            if report.route == "regression":
                assert all_hold(check_regression_conditions(aug, q, report.w_set))
                verified += 1
            elif report.route == "g-estimation":
                assert all_hold(
                    check_gcomp_conditions(aug, q, report.w_set, report.z_set)
                )
                verified += 1
        assert verified >= 10

    def test_determinism(self, matched_dag):
        aug = augment_with_interventions(matched_dag, ["GENO", "BMI"])
        first = search_adjustment_sets(aug, QUERY)
        second = search_adjustment_sets(aug, QUERY)
        assert first == second

    def test_candidate_guard(self):
        lines = ["node X", "node M", "node Y outcome", "edge X Y", "edge M Y"]
        lines += [f"node c{i}" for i in range(17)]
        aug = augment_with_interventions(parse_graph("\n".join(lines)), ["X", "M"])
        with pytest.raises(GraphError, match="guard"):
            search_adjustment_sets(aug, DirectEffectQuery(x="X", m="M", y="Y"))


class TestConditionSystemRelations:
    def test_joint_covariate_condition_implies_exposure_side(self):
        # W independent of both indicators implies W independent of the
        # exposure indicator alone: fewer paths to block.
        rng = np.random.default_rng(555)
        checked = 0
        for _ in range(60):
            dag = random_dag(rng, max_nodes=7, max_edges=10, latent_prob=0.2)
            observed = sorted(
                n for n in dag.node_names if dag.kind(n).value == "observed"
            )
            if len(observed) < 4:
                continue
            x, m, y_name, w = observed[:4]
            text = []
            for n in sorted(dag.node_names):
                kind = dag.kind(n).value
                if n == y_name:
                    text.append(f"node {n} outcome")
                elif kind == "latent":
                    text.append(f"node {n} latent")
                else:
                    text.append(f"node {n}")
            text += [f"edge {a} {b}" for a, b in sorted(dag.edges)]
            base = parse_graph("\n".join(text))
            q = DirectEffectQuery(x=x, m=m, y=y_name)
            aug = augment_with_interventions(base, [x, m])
            reg = check_regression_conditions(aug, q, {w})
            if reg[0].holds:
                gc = check_gcomp_conditions(aug, q, {w}, set())
                assert gc[0].holds
                checked += 1
        assert checked >= 10

    def test_outcome_conditions_do_not_transfer(self):
        # Holding the joint outcome condition does not imply the exposure-only
        # outcome condition: dropping M from the conditioning set can open a
        # path that M was blocking.  Keeps the module honest about which
        # implications it may assume.
        dag = parse_graph(
            "node X\nnode M\nnode P\nnode Y outcome\n"
            "edge P X\nedge P M\nedge X M\nedge M Y"
        )
        q = DirectEffectQuery(x="X", m="M", y="Y")
        aug = augment_with_interventions(dag, ["X", "M"])
        reg = check_regression_conditions(aug, q, set())
        assert reg[0].holds and reg[1].holds
        gc = check_gcomp_conditions(aug, q, set(), set())
        assert not gc[2].holds


class TestRendering:
    def test_text_and_kv(self, matched_dag):
        aug = augment_with_interventions(matched_dag, ["GENO", "BMI"])
        report = search_adjustment_sets(aug, QUERY)
        text = report_text(report)
        assert "route: g-estimation" in text
        assert "W = {DEMO}" in text
        kv = report_kv(report)
        lines = dict(
            line.split(" ", 1) for line in kv.strip().splitlines() if " " in line
        )
        assert lines["route"] == "g-estimation"
        assert lines["w"] == "DEMO"
        assert lines["z"] == "BEHAVE"
        assert lines["condition.collapsibility"].startswith("true ")
