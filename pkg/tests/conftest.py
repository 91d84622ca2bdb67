"""Shared fixtures and random-structure helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from ctrldirect import CausalDag, MatchedDataset, NodeKind, graphs


@pytest.fixture(scope="session")
def cohort_dag() -> CausalDag:
    return graphs.load("mi_study_cohort")


@pytest.fixture(scope="session")
def augmented_dag() -> CausalDag:
    return graphs.load("mi_study_cohort_augmented")


@pytest.fixture(scope="session")
def matched_dag() -> CausalDag:
    return graphs.load("mi_study_matched")


def random_dag(
    rng: np.random.Generator,
    max_nodes: int = 10,
    max_edges: int = 18,
    latent_prob: float = 0.15,
) -> CausalDag:
    """Random DAG over a random topological order, mixed observed/latent kinds."""
    n = int(rng.integers(2, max_nodes + 1))
    order = rng.permutation(n)
    names = [f"n{i}" for i in range(n)]
    possible = [
        (names[order[i]], names[order[j]]) for i in range(n) for j in range(i + 1, n)
    ]
    rng.shuffle(possible)
    n_edges = int(rng.integers(0, min(max_edges, len(possible)) + 1))
    kinds = [
        (name, NodeKind.LATENT if rng.random() < latent_prob else NodeKind.OBSERVED)
        for name in names
    ]
    return CausalDag(kinds, possible[:n_edges])


def random_query_sets(rng: np.random.Generator, dag: CausalDag):
    """Disjoint nonempty a, b and a conditioning set c drawn from dag nodes."""
    nodes = sorted(dag.node_names)
    rng.shuffle(nodes)
    n_a = int(rng.integers(1, max(2, len(nodes) // 3 + 1)))
    n_b = int(rng.integers(1, max(2, (len(nodes) - n_a) // 2 + 1)))
    a = frozenset(nodes[:n_a])
    b = frozenset(nodes[n_a : n_a + n_b])
    rest = nodes[n_a + n_b :]
    c = frozenset(x for x in rest if rng.random() < 0.4)
    return a, b, c


def make_dataset(
    x_case,
    x_control,
    m_case=None,
    m_control=None,
    z_case=None,
    z_control=None,
    covariate_names=None,
) -> MatchedDataset:
    """Small-dataset builder with sensible zero defaults."""
    n = len(x_case)
    if m_case is None:
        m_case = np.zeros(n)
    if m_control is None:
        m_control = np.zeros(n)
    if z_case is None:
        z_case = np.empty((n, 0))
        z_control = np.empty((n, 0))
        covariate_names = ()
    elif covariate_names is None:
        z_case = np.asarray(z_case, dtype=float)
        covariate_names = tuple(f"z{i}" for i in range(z_case.shape[1]))
    return MatchedDataset(
        pair_ids=[f"p{i}" for i in range(n)],
        x_case=x_case,
        x_control=x_control,
        m_case=m_case,
        m_control=m_control,
        z_case=z_case,
        z_control=z_control,
        covariate_names=covariate_names,
    )


def random_matched_dataset(
    rng: np.random.Generator,
    n_pairs: int,
    n_covariates: int = 1,
    binary_exposure: bool = True,
) -> MatchedDataset:
    if binary_exposure:
        x_case = rng.integers(0, 2, n_pairs).astype(float)
        x_control = rng.integers(0, 2, n_pairs).astype(float)
    else:
        x_case = rng.integers(0, 3, n_pairs).astype(float)
        x_control = rng.integers(0, 3, n_pairs).astype(float)
    return MatchedDataset(
        pair_ids=[f"p{i}" for i in range(n_pairs)],
        x_case=x_case,
        x_control=x_control,
        m_case=rng.normal(size=n_pairs),
        m_control=rng.normal(size=n_pairs),
        z_case=rng.normal(size=(n_pairs, n_covariates)),
        z_control=rng.normal(size=(n_pairs, n_covariates)),
        covariate_names=tuple(f"z{i}" for i in range(n_covariates)),
    )
