"""Conditional logistic regression for 1-to-1 matched pairs.

Conditioning each pair on its one-case-one-control outcome eliminates the
pair intercepts and leaves a logistic likelihood in case-minus-control
differences:

    loglik(theta) = sum_i log sigma(theta . d_i)

with d_i = (dx_i, dm_i, dz_i) and sigma the logistic function.  Pairs
with all-zero differences are kept; they contribute log(1/2) and nothing
to the score, and dropping them would silently change n for the variance
stage downstream.

``fit_difference_logit`` is the general solver on an arbitrary design of
differences (plain Newton from a zero start with step halving, globally
convergent for this concave likelihood); ``clogit_fit`` applies it to the
full (dx, dm, dz...) design of a matched dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .data import PairDifferences
from .errors import FitError, NonIdentifiedError, SeparationError

SCORE_TOL = 1e-10
STEP_TOL = 1e-10
MAX_ITERATIONS = 100
MAX_HALVINGS = 30
# e^30 on the log-odds scale dwarfs any finite-sample information; a
# parameter running past it means the MLE is drifting to infinity.
SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class ClogitParams:
    """Coefficients (delta, eta, beta...) on the within-pair differences."""

    delta: float
    eta: float
    beta: tuple[float, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.array([self.delta, self.eta, *self.beta], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ClogitParams":
        arr = np.asarray(values, dtype=float)
        return cls(float(arr[0]), float(arr[1]), tuple(float(v) for v in arr[2:]))


@dataclass(frozen=True)
class DifferenceLogitFit:
    """Result of the general Newton fit on a difference design."""

    coef: np.ndarray
    covariance: np.ndarray  # inverse observed information at the optimum
    loglik: float
    iterations: int
    converged: bool
    n_pairs: int
    coef_names: tuple[str, ...]

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


@dataclass(frozen=True)
class ClogitFit:
    params: ClogitParams
    covariance: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    n_pairs: int

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def _as_vector(params, n_coef: int) -> np.ndarray:
    if isinstance(params, ClogitParams):
        theta = params.as_array()
    else:
        theta = np.asarray(params, dtype=float)
    if theta.shape != (n_coef,):
        raise FitError(f"expected {n_coef} coefficients, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise FitError("non-finite parameters")
    return theta


def _loglik(design: np.ndarray, theta: np.ndarray) -> float:
    # log sigma(t) = -log(1 + exp(-t)), stable at both tails
    t = design @ theta
    return float(-np.sum(np.logaddexp(0.0, -t)))


def _score(design: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return design.T @ expit(-(design @ theta))


def _hessian(design: np.ndarray, theta: np.ndarray) -> np.ndarray:
    t = design @ theta
    w = expit(t) * expit(-t)
    return -(design * w[:, None]).T @ design


def clogit_loglik(diffs: PairDifferences, params) -> float:
    """Sum over pairs of log sigma(theta . d_i)."""
    design = diffs.design_matrix()
    return _loglik(design, _as_vector(params, design.shape[1]))


def clogit_score(diffs: PairDifferences, params) -> np.ndarray:
    """Gradient of the log likelihood: sum_i d_i * sigma(-theta . d_i)."""
    design = diffs.design_matrix()
    return _score(design, _as_vector(params, design.shape[1]))


def clogit_hessian(diffs: PairDifferences, params) -> np.ndarray:
    """Hessian -sum_i sigma(t_i) sigma(-t_i) d_i d_i^T (negative semidefinite)."""
    design = diffs.design_matrix()
    return _hessian(design, _as_vector(params, design.shape[1]))


def fit_difference_logit(
    design, coef_names: Sequence[str] | None = None
) -> DifferenceLogitFit:
    """Maximize sum_i log sigma(theta . d_i) by Newton with step halving."""
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise FitError(f"design must be 2-d, got shape {design.shape}")
    if not np.all(np.isfinite(design)):
        raise FitError("non-finite differences")
    n, p = design.shape
    names = tuple(coef_names) if coef_names else tuple(f"coef{j}" for j in range(p))
    if len(names) != p:
        raise FitError(f"{len(names)} names for {p} columns")
    for j, name in enumerate(names):
        has_pos = bool(np.any(design[:, j] > 0.0))
        has_neg = bool(np.any(design[:, j] < 0.0))
        if not (has_pos or has_neg):
            raise NonIdentifiedError(
                f"nonidentified: no within-pair variation in {name}"
            )
        if not (has_pos and has_neg):
            # Single-signed differences make this score component strictly
            # one-signed for every theta: the likelihood is monotone and
            # the conditional MLE sits at infinity.
            raise SeparationError(f"nonconvergence: separation in {name}")

    theta = np.zeros(p)
    loglik = _loglik(design, theta)
    iterations = 0
    converged = False
    while iterations < MAX_ITERATIONS:
        score = _score(design, theta)
        if np.max(np.abs(score)) < SCORE_TOL:
            converged = True
            break
        hessian = _hessian(design, theta)
        try:
            step = -np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            raise NonIdentifiedError("nonidentified: singular Hessian") from None
        new_theta = theta + step
        new_loglik = _loglik(design, new_theta)
        # Non-decreasing up to summation rounding noise; a strict comparison
        # would halve away the final quadratic steps on the optimum plateau.
        floor = loglik - 4e-14 * (1.0 + abs(loglik))
        halvings = 0
        while new_loglik < floor and halvings < MAX_HALVINGS:
            step = step / 2.0
            new_theta = theta + step
            new_loglik = _loglik(design, new_theta)
            halvings += 1
        if new_loglik < floor:
            raise FitError("nonconvergence: step halving exhausted")
        theta, loglik = new_theta, new_loglik
        iterations += 1
        if np.max(np.abs(theta)) > SEPARATION_BOUND:
            # For a monotone likelihood the score keeps one sign along the
            # runaway coordinate, so the iterates never turn back.
            raise SeparationError("nonconvergence: separation")
        if np.max(np.abs(step)) < STEP_TOL:
            converged = True
            break
    if not converged:
        raise FitError(f"nonconvergence: maximum iterations ({MAX_ITERATIONS}) exceeded")

    try:
        covariance = np.linalg.inv(-_hessian(design, theta))
    except np.linalg.LinAlgError:
        raise NonIdentifiedError("nonidentified: singular Hessian") from None
    covariance = (covariance + covariance.T) / 2.0
    covariance.flags.writeable = False
    theta = theta.copy()
    theta.flags.writeable = False
    return DifferenceLogitFit(
        coef=theta,
        covariance=covariance,
        loglik=loglik,
        iterations=iterations,
        converged=True,
        n_pairs=n,
        coef_names=names,
    )


def clogit_fit(diffs: PairDifferences) -> ClogitFit:
    """Conditional MLE of (delta, eta, beta...) for a matched dataset."""
    names = ("dx", "dm", *[f"d{name}" for name in diffs.covariate_names])
    fit = fit_difference_logit(diffs.design_matrix(), names)
    return ClogitFit(
        params=ClogitParams.from_array(fit.coef),
        covariance=fit.covariance,
        loglik=fit.loglik,
        iterations=fit.iterations,
        converged=fit.converged,
        n_pairs=fit.n_pairs,
    )
