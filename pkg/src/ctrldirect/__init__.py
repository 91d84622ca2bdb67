"""Controlled direct effects from matched case-control studies.

Check identifiability on a causal diagram, estimate the effect by
conditional logistic regression plus G-estimation with a stacked
sandwich variance, and validate everything against a built-in study
simulator.
"""

__version__ = "0.1.0"

from .clogit import ClogitFit, ClogitParams, clogit_fit, clogit_loglik, clogit_score
from .data import (
    ColumnSchema,
    GenotypeSummary,
    MatchedDataset,
    PairDifferences,
    PairRecord,
    genotype_summary,
    load_matched_csv,
    pair_differences,
    to_csv,
)
from .dsep import (
    d_connected,
    d_separated,
    enumerate_paths,
    find_open_path,
    is_collider,
    path_blocked,
)
from .errors import (
    DatasetError,
    FitError,
    GraphError,
    NonIdentifiedError,
    QueryError,
    SeparationError,
    SimulationError,
)
from .gest import (
    DirectEffectEstimate,
    Theta,
    estimate_direct_effect,
    gest_score,
    sandwich_variance,
    solve_psi,
    stacked_u,
)
from .graph import (
    CausalDag,
    DirectEffectQuery,
    NodeKind,
    ancestors,
    augment_with_interventions,
    descendants,
    parse_graph,
    serialize_graph,
)
from .identify import (
    IdentificationReport,
    check_collapsibility,
    check_gcomp_conditions,
    check_regression_conditions,
    search_adjustment_sets,
)
from .simulate import (
    CalibrationReport,
    Cohort,
    SimConfig,
    matched_pair_indices,
    replicate_study,
    sample_matched,
    scenario_confounded,
    scenario_null,
    simulate_cohort,
    simulate_matched_dataset,
)

__all__ = [
    "CausalDag",
    "NodeKind",
    "DirectEffectQuery",
    "parse_graph",
    "serialize_graph",
    "augment_with_interventions",
    "ancestors",
    "descendants",
    "is_collider",
    "path_blocked",
    "d_separated",
    "d_connected",
    "enumerate_paths",
    "find_open_path",
    "check_regression_conditions",
    "check_gcomp_conditions",
    "check_collapsibility",
    "search_adjustment_sets",
    "IdentificationReport",
    "PairRecord",
    "MatchedDataset",
    "PairDifferences",
    "ColumnSchema",
    "load_matched_csv",
    "to_csv",
    "pair_differences",
    "genotype_summary",
    "GenotypeSummary",
    "ClogitParams",
    "ClogitFit",
    "clogit_loglik",
    "clogit_score",
    "clogit_fit",
    "Theta",
    "DirectEffectEstimate",
    "gest_score",
    "solve_psi",
    "stacked_u",
    "sandwich_variance",
    "estimate_direct_effect",
    "SimConfig",
    "Cohort",
    "CalibrationReport",
    "simulate_cohort",
    "sample_matched",
    "matched_pair_indices",
    "simulate_matched_dataset",
    "replicate_study",
    "scenario_confounded",
    "scenario_null",
    "GraphError",
    "QueryError",
    "DatasetError",
    "FitError",
    "SeparationError",
    "NonIdentifiedError",
    "SimulationError",
]
