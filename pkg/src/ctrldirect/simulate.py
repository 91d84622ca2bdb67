"""Synthetic matched case-control studies with known causal truth.

The generator draws cohorts from a structural model with a matching
covariate W, a latent confounder U, exposure X, an exposure-induced
covariate Z, a mediator M and a rare binary outcome Y:

    W ~ uniform strata          U = a*W + N(0,1)
    X ~ Bernoulli(expit(. + b*W))        (or Binomial(2, .) allele counts)
    Z ~ Bernoulli(expit(. + c*W + d*U + e*X))
    M = . + f*W + g*X + h*Z + sd*N(0,1)
    Y ~ Bernoulli( lam0 * exp(psi*X + gamma*M + i*W + j*U) ), clipped at 1

The log link makes psi and gamma exact causal log relative risks, so
estimator calibration can be asserted at tight tolerances.  lam0 is
calibrated on the natural cohort so that the mean pre-clip risk equals
the configured prevalence.

Retrospective sampling keeps cases and draws, for each, one unused
control from the same W stratum.  Selection reads only (Y, W), which
enforces the collapsibility condition by construction.

All randomness flows through counter-based Philox streams keyed on the
seed, so cohorts, samples and whole replicate batches are reproducible
and order-independent.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import expit

from .data import MatchedDataset
from .errors import SimulationError
from .gest import estimate_direct_effect
from .simulate_report import CalibrationReport, ReplicateRow

logger = logging.getLogger(__name__)

RNG_NAME = "philox"
MAX_CLIP_FRACTION = 1e-3
MIN_PAIRS = 30
MAX_PREVALENCE = 0.05


def _rng(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def _derived_seed(seed: int, index: int) -> int:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SimConfig:
    """Structural coefficients, sampling targets and the RNG seed."""

    cohort_size: int = 200_000
    n_pairs: int | None = 1000
    seed: int = 1
    prevalence: float = 0.004
    w_levels: int = 4
    exposure_model: str = "binary"  # "binary" or "genotype"
    exposure_intercept: float = -0.3
    x_on_w: float = 0.1
    u_on_w: float = 0.2
    z_intercept: float = -0.5
    z_on_w: float = 0.15
    z_on_u: float = 0.9
    z_on_x: float = 0.8
    m_intercept: float = 0.0
    m_on_w: float = 0.3
    m_on_x: float = 0.6
    m_on_z: float = 1.0
    m_sd: float = 1.0
    psi: float = math.log(0.72)
    gamma: float = math.log(1.15)
    y_on_w: float = 0.15
    y_on_u: float = 0.6

    def __post_init__(self) -> None:
        if self.cohort_size < 1:
            raise SimulationError("cohort_size must be positive")
        if not 0.0 < self.prevalence <= MAX_PREVALENCE:
            raise SimulationError(
                f"prevalence must lie in (0, {MAX_PREVALENCE}]: the outcome "
                "model is a rare-disease log link"
            )
        if self.w_levels < 1:
            raise SimulationError("w_levels must be at least 1")
        if self.exposure_model not in ("binary", "genotype"):
            raise SimulationError(
                f"unknown exposure_model {self.exposure_model!r}"
            )
        if self.m_sd <= 0:
            raise SimulationError("m_sd must be positive")
        if self.n_pairs is not None and self.n_pairs < 1:
            raise SimulationError("n_pairs must be positive or omitted")


@dataclass(frozen=True)
class Cohort:
    """A generated cohort plus everything needed to re-generate it under
    interventions on X and/or M with the same noise draws."""

    config: SimConfig
    w: np.ndarray
    u: np.ndarray
    x: np.ndarray
    z: np.ndarray
    m: np.ndarray
    y: np.ndarray
    lam0: float
    n_clipped: int
    do_x: float | None = None
    do_m: float | None = None

    @property
    def size(self) -> int:
        return self.w.shape[0]

    @property
    def empirical_prevalence(self) -> float:
        return float(np.mean(self.y))

    def intervene(self, do_x: float | None = None, do_m: float | None = None) -> "Cohort":
        """Same cohort, same noise, with X and/or M set by intervention."""
        return simulate_cohort(self.config, do_x=do_x, do_m=do_m)


def simulate_cohort(
    config: SimConfig,
    do_x: float | None = None,
    do_m: float | None = None,
) -> Cohort:
    """Generate one cohort; optional do-overrides replace X and/or M.

    The noise draws are consumed in a fixed order regardless of the
    overrides, so setting X (or M) to the value a subject would have had
    anyway reproduces that subject's record exactly.
    """
    cfg = config
    n = cfg.cohort_size
    rng = _rng(cfg.seed, 0)

    w = rng.integers(0, cfg.w_levels, size=n).astype(float)
    u = cfg.u_on_w * w + rng.standard_normal(n)

    if cfg.exposure_model == "binary":
        p_x = expit(cfg.exposure_intercept + cfg.x_on_w * w)
        x_nat = (rng.random(n) < p_x).astype(float)
    else:
        p_allele = expit(cfg.exposure_intercept + cfg.x_on_w * w)
        x_nat = rng.binomial(2, p_allele).astype(float)
    x = np.full(n, float(do_x)) if do_x is not None else x_nat

    u_z = rng.random(n)

    def z_given(x_values: np.ndarray) -> np.ndarray:
        p_z = expit(
            cfg.z_intercept + cfg.z_on_w * w + cfg.z_on_u * u + cfg.z_on_x * x_values
        )
        return (u_z < p_z).astype(float)

    z_nat = z_given(x_nat)
    z = z_nat if do_x is None else z_given(x)

    e_m = rng.standard_normal(n)

    def m_given(x_values: np.ndarray, z_values: np.ndarray) -> np.ndarray:
        return (
            cfg.m_intercept
            + cfg.m_on_w * w
            + cfg.m_on_x * x_values
            + cfg.m_on_z * z_values
            + cfg.m_sd * e_m
        )

    m_nat = m_given(x_nat, z_nat)
    m = np.full(n, float(do_m)) if do_m is not None else m_given(x, z)

    def log_risk_shape(x_values: np.ndarray, m_values: np.ndarray) -> np.ndarray:
        return (
            cfg.psi * x_values
            + cfg.gamma * m_values
            + cfg.y_on_w * w
            + cfg.y_on_u * u
        )

    # lam0 targets the configured prevalence on the *natural* cohort; it is
    # a structural constant, identical across interventional regimes.
    lam0 = cfg.prevalence / float(np.mean(np.exp(log_risk_shape(x_nat, m_nat))))
    risk = lam0 * np.exp(log_risk_shape(x, m))
    n_clipped = int(np.sum(risk > 1.0))
    if n_clipped > MAX_CLIP_FRACTION * n:
        raise SimulationError("prevalence too high for log link")
    risk = np.minimum(risk, 1.0)
    y = (rng.random(n) < risk).astype(np.int8)

    for arr in (w, u, x, z, m, y):
        arr.flags.writeable = False
    return Cohort(
        config=cfg,
        w=w,
        u=u,
        x=x,
        z=z,
        m=m,
        y=y,
        lam0=lam0,
        n_clipped=n_clipped,
        do_x=do_x,
        do_m=do_m,
    )


def matched_pair_indices(
    cohort: Cohort, n_pairs: int | None = None
) -> tuple[np.ndarray, np.ndarray, int]:
    """Subject indices of (cases, matched controls) plus the dropped-case count.

    All cases (or the first ``n_pairs`` of them) enter; each gets one
    control drawn uniformly without replacement from the unaffected
    members of its W stratum.  Selection reads nothing but (Y, W).
    """
    cfg = cohort.config
    rng = _rng(cfg.seed, 1)

    case_idx = np.flatnonzero(cohort.y == 1)
    if n_pairs is not None:
        case_idx = case_idx[:n_pairs]
    control_idx = np.flatnonzero(cohort.y == 0)

    pools: dict[float, np.ndarray] = {}
    used: dict[float, int] = {}
    for stratum in np.unique(cohort.w[control_idx]):
        members = control_idx[cohort.w[control_idx] == stratum]
        pools[float(stratum)] = rng.permutation(members)
        used[float(stratum)] = 0

    chosen_cases: list[int] = []
    chosen_controls: list[int] = []
    dropped = 0
    for idx in case_idx:
        stratum = float(cohort.w[idx])
        pool = pools.get(stratum)
        if pool is None or used[stratum] >= len(pool):
            dropped += 1
            continue
        chosen_cases.append(int(idx))
        chosen_controls.append(int(pool[used[stratum]]))
        used[stratum] += 1
    if dropped:
        logger.warning(
            "dropped %d case(s) whose W stratum ran out of controls", dropped
        )
    return np.asarray(chosen_cases, dtype=int), np.asarray(chosen_controls, dtype=int), dropped


def sample_matched(cohort: Cohort, n_pairs: int | None = None) -> MatchedDataset:
    """Retrospective 1-to-1 matched sampling on identical W strata.

    Cases in exhausted strata are dropped with a logged warning; fewer
    than 30 surviving pairs is an error.
    """
    cfg = cohort.config
    if n_pairs is None:
        n_pairs = cfg.n_pairs
    ca, co, dropped = matched_pair_indices(cohort, n_pairs)
    if len(ca) < MIN_PAIRS:
        raise SimulationError(
            f"fewer than {MIN_PAIRS} matched pairs (got {len(ca)})"
        )
    provenance = (
        f"simulated; matched 1-to-1 on W ({cfg.w_levels} strata); "
        f"rng {RNG_NAME}; seed {cfg.seed}; dropped {dropped} case(s)"
    )
    return MatchedDataset(
        pair_ids=[f"p{i + 1:06d}" for i in range(len(ca))],
        x_case=cohort.x[ca],
        x_control=cohort.x[co],
        m_case=cohort.m[ca],
        m_control=cohort.m[co],
        z_case=cohort.z[ca][:, None],
        z_control=cohort.z[co][:, None],
        covariate_names=("z",),
        provenance=provenance,
    )


def simulate_matched_dataset(config: SimConfig) -> MatchedDataset:
    """Cohort generation plus matched sampling in one call."""
    return sample_matched(simulate_cohort(config))


def replicate_study(config: SimConfig, n_reps: int) -> CalibrationReport:
    """Run simulate -> sample -> estimate ``n_reps`` times and aggregate.

    Per-replicate seeds derive from the master seed, so results do not
    depend on execution order.  Failures are counted, never fatal.
    """
    if n_reps < 1:
        raise SimulationError("n_reps must be at least 1")
    rows: list[ReplicateRow] = []
    identity_sum = 0.0
    identity_sumsq = 0.0
    identity_n = 0
    for rep in range(n_reps):
        cfg = replace(config, seed=_derived_seed(config.seed, rep))
        try:
            cohort = simulate_cohort(cfg)
            dataset = sample_matched(cohort)
            est = estimate_direct_effect(dataset)
        except Exception as exc:  # noqa: BLE001 - failures become counts
            rows.append(ReplicateRow(rep=rep, error=str(exc)))
            continue
        terms = (dataset.x_case - dataset.x_control) * np.exp(
            -config.psi * dataset.x_case - config.gamma * dataset.m_case
        )
        identity_sum += float(np.sum(terms))
        identity_sumsq += float(np.sum(terms**2))
        identity_n += terms.size
        rows.append(
            ReplicateRow(
                rep=rep,
                psi_hat=est.psi_hat,
                se=est.se,
                ci_low=est.ci_low,
                ci_high=est.ci_high,
                delta_hat=est.clogit.params.delta,
                eta_hat=est.eta_hat,
                n_pairs=est.n_pairs,
            )
        )
    return CalibrationReport(
        psi_true=config.psi,
        gamma_true=config.gamma,
        seed=config.seed,
        rng=RNG_NAME,
        rows=tuple(rows),
        identity_sum=identity_sum,
        identity_sumsq=identity_sumsq,
        identity_n=identity_n,
    )


# -- scenario presets ---------------------------------------------------


def scenario_confounded(seed: int = 20260810) -> SimConfig:
    """Rare outcome, exposure-induced Z confounded with the outcome
    through the latent U, direct-effect relative risk 0.72."""
    return SimConfig(
        cohort_size=560_000,
        n_pairs=2000,
        seed=seed,
        prevalence=0.004,
        w_levels=4,
        exposure_model="binary",
        exposure_intercept=-0.3,
        x_on_w=0.1,
        u_on_w=0.2,
        z_intercept=-0.5,
        z_on_w=0.15,
        z_on_u=0.9,
        z_on_x=0.8,
        m_intercept=0.0,
        m_on_w=0.3,
        m_on_x=0.6,
        m_on_z=1.0,
        m_sd=1.0,
        psi=math.log(0.72),
        gamma=math.log(1.15),
        y_on_w=0.15,
        y_on_u=0.6,
    )


def scenario_null(seed: int = 20260810) -> SimConfig:
    """Same confounding structure with the direct pathway switched off."""
    return replace(
        scenario_confounded(seed=seed), psi=0.0, cohort_size=120_000, n_pairs=450
    )


SCENARIOS = {
    "confounded": scenario_confounded,
    "null": scenario_null,
}


# -- key-value config files ---------------------------------------------


def config_to_kv(config: SimConfig) -> str:
    lines = []
    for f in fields(SimConfig):
        value = getattr(config, f.name)
        if value is None:
            rendered = "none"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} {rendered}")
    return "\n".join(lines) + "\n"


def config_from_kv(text: str) -> SimConfig:
    known = {f.name: f for f in fields(SimConfig)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=1)
        if len(parts) != 2:
            raise SimulationError(f"config line {lineno}: expected 'key value'")
        key, value = parts
        if key not in known:
            raise SimulationError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise SimulationError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = _parse_config_value(key, value, lineno)
    return SimConfig(**values)


def _parse_config_value(key: str, value: str, lineno: int):
    if key == "n_pairs":
        return None if value.lower() == "none" else _parse_int(value, key, lineno)
    if key in ("cohort_size", "seed", "w_levels"):
        return _parse_int(value, key, lineno)
    if key == "exposure_model":
        return value
    try:
        return float(value)
    except ValueError:
        raise SimulationError(
            f"config line {lineno}: {key} needs a number, got {value!r}"
        ) from None


def _parse_int(value: str, key: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise SimulationError(
            f"config line {lineno}: {key} needs an integer, got {value!r}"
        ) from None


def cohort_to_csv(cohort: Cohort) -> str:
    """Per-subject export of the generated cohort (w, u, z, x, m, y)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["w", "u", "z", "x", "m", "y"])
    for i in range(cohort.size):
        writer.writerow(
            [
                repr(float(cohort.w[i])),
                repr(float(cohort.u[i])),
                repr(float(cohort.z[i])),
                repr(float(cohort.x[i])),
                repr(float(cohort.m[i])),
                int(cohort.y[i]),
            ]
        )
    return out.getvalue()
