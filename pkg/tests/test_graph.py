"""Graph parsing, validation, augmentation and closure tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrldirect import (
    CausalDag,
    DirectEffectQuery,
    GraphError,
    NodeKind,
    QueryError,
    ancestors,
    augment_with_interventions,
    descendants,
    parse_graph,
    serialize_graph,
)
from conftest import random_dag


class TestParsing:
    def test_bundled_matched_graph_shape(self, matched_dag):
        assert len(matched_dag) == 7
        assert len(matched_dag.edges) == 13
        assert matched_dag.kind("UNOBSERVED") is NodeKind.LATENT
        assert matched_dag.kind("S") is NodeKind.SELECTION
        assert matched_dag.kind("MI") is NodeKind.OUTCOME
        assert matched_dag.kind("GENO") is NodeKind.OBSERVED

    def test_two_cycle_rejected(self):
        with pytest.raises(GraphError, match="cycle"):
            parse_graph("node A\nnode B\nedge A B\nedge B A")

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError, match="cycle"):
            parse_graph("node A\nedge A A")

    def test_empty_file_is_valid_empty_graph(self):
        dag = parse_graph("")
        assert len(dag) == 0
        assert serialize_graph(dag) == ""

    def test_comments_and_blank_lines_ignored(self):
        dag = parse_graph("# a comment\n\nnode A\n   \nnode B\nedge A B\n")
        assert dag.node_names == {"A", "B"}

    @pytest.mark.parametrize(
        "text, message",
        [
            ("node A\nnode A", "duplicate node"),
            ("node A\nedge A B", "unknown edge endpoint"),
            ("node A\nnode B\nedge A B\nedge A B", "duplicate edge"),
            ("node A selection\nnode B selection", "two selection nodes"),
            ("node A selection\nnode B\nedge A B", "has a child"),
            ("node 1bad", "invalid node name"),
            ("node A weird", "unknown node kind"),
            ("nodes A", "unknown directive"),
            ("node A intervention", "exactly one child"),
            ("node A intervention\nnode B\nnode C\nedge A B\nedge A C", "exactly one child"),
            ("node A intervention\nnode B\nedge B A", "has a parent"),
        ],
    )
    def test_validation_errors(self, text, message):
        with pytest.raises(GraphError, match=message):
            parse_graph(text)


class TestAugmentation:
    def test_matches_bundled_augmented_graph(self, cohort_dag, augmented_dag):
        assert augment_with_interventions(cohort_dag, ["GENO", "BMI"]) == augmented_dag

    def test_empty_targets_is_identity(self, cohort_dag):
        assert augment_with_interventions(cohort_dag, []) == cohort_dag

    def test_latent_target_rejected(self, cohort_dag):
        with pytest.raises(GraphError, match="latent"):
            augment_with_interventions(cohort_dag, ["UNOBSERVED"])

    def test_selection_and_outcome_targets_rejected(self, matched_dag):
        with pytest.raises(GraphError, match="selection"):
            augment_with_interventions(matched_dag, ["S"])
        with pytest.raises(GraphError, match="outcome"):
            augment_with_interventions(matched_dag, ["MI"])

    def test_double_augmentation_errors(self, cohort_dag):
        once = augment_with_interventions(cohort_dag, ["GENO"])
        with pytest.raises(GraphError, match="already in use"):
            augment_with_interventions(once, ["GENO"])

    def test_augmenting_an_indicator_rejected(self, cohort_dag):
        once = augment_with_interventions(cohort_dag, ["GENO"])
        with pytest.raises(GraphError, match="intervention"):
            augment_with_interventions(once, ["sigma_GENO"])

    def test_node_count_grows_by_targets(self, cohort_dag):
        aug = augment_with_interventions(cohort_dag, ["GENO", "BMI"])
        assert len(aug) == len(cohort_dag) + 2

    def test_name_collision_is_an_error(self):
        dag = parse_graph("node A\nnode sigma_A")
        with pytest.raises(GraphError, match="already in use"):
            augment_with_interventions(dag, ["A"])


def _closure_oracle(dag, start, forward=True):
    """Brute-force edge walk, independent of the library's traversal."""
    out = {start}
    changed = True
    while changed:
        changed = False
        for a, b in dag.edges:
            src, dst = (a, b) if forward else (b, a)
            if src in out and dst not in out:
                out.add(dst)
                changed = True
    return out


class TestClosures:
    def test_descendants_on_matched_graph(self, matched_dag):
        assert descendants(matched_dag, "BMI") == {"BMI", "MI", "S"}
        assert descendants(matched_dag, "BMI") == _closure_oracle(matched_dag, "BMI")

    def test_descendants_on_cohort_graph(self, cohort_dag):
        assert descendants(cohort_dag, "BMI") == {"BMI", "MI"}

    def test_sink_descends_to_itself(self, matched_dag):
        assert descendants(matched_dag, "S") == {"S"}

    def test_behave_descends_from_geno(self, cohort_dag):
        assert "BEHAVE" in descendants(cohort_dag, "GENO")

    def test_reflexive_convention(self, cohort_dag):
        for node in cohort_dag:
            assert node in ancestors(cohort_dag, node)
            assert node in descendants(cohort_dag, node)

    def test_unknown_node(self, cohort_dag):
        with pytest.raises(QueryError, match="unknown node"):
            ancestors(cohort_dag, "nope")

    def test_duality_on_random_dags(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            dag = random_dag(rng, max_nodes=12, max_edges=24)
            for a in dag:
                desc_a = descendants(dag, a)
                for b in dag:
                    assert (a in ancestors(dag, b)) == (b in desc_a)

    def test_closures_match_oracle_on_random_dags(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            dag = random_dag(rng)
            for node in dag:
                assert descendants(dag, node) == _closure_oracle(dag, node)
                assert ancestors(dag, node) == _closure_oracle(dag, node, forward=False)


@st.composite
def small_dags(draw):
    n = draw(st.integers(min_value=0, max_value=7))
    names = [f"n{i}" for i in range(n)]
    kind_choices = [NodeKind.OBSERVED, NodeKind.LATENT, NodeKind.OUTCOME]
    kinds = [(name, draw(st.sampled_from(kind_choices))) for name in names]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges.append((names[i], names[j]))
    return CausalDag(kinds, edges)


class TestSerialization:
    @settings(max_examples=150, deadline=None)
    @given(small_dags())
    def test_round_trip(self, dag):
        assert parse_graph(serialize_graph(dag)) == dag

    def test_round_trip_bundled(self, cohort_dag, augmented_dag, matched_dag):
        for dag in (cohort_dag, augmented_dag, matched_dag):
            assert parse_graph(serialize_graph(dag)) == dag

    def test_canonical_order(self, cohort_dag):
        text = serialize_graph(cohort_dag)
        lines = text.strip().splitlines()
        node_lines = [l for l in lines if l.startswith("node")]
        edge_lines = [l for l in lines if l.startswith("edge")]
        assert node_lines == sorted(node_lines)
        assert edge_lines == sorted(edge_lines)
        assert lines == node_lines + edge_lines


class TestDirectEffectQuery:
    def test_valid_on_cohort_graph(self, cohort_dag):
        DirectEffectQuery(x="GENO", m="BMI", y="MI").validate(cohort_dag)

    def test_outcome_must_be_outcome_kind(self, cohort_dag):
        with pytest.raises(QueryError, match="outcome"):
            DirectEffectQuery(x="GENO", m="BMI", y="DEMO").validate(cohort_dag)

    def test_nodes_distinct(self, cohort_dag):
        with pytest.raises(QueryError, match="distinct"):
            DirectEffectQuery(x="GENO", m="GENO", y="MI").validate(cohort_dag)

    def test_latent_exposure_rejected(self, cohort_dag):
        with pytest.raises(QueryError, match="observed"):
            DirectEffectQuery(x="UNOBSERVED", m="BMI", y="MI").validate(cohort_dag)
