"""G-estimation of a controlled direct effect from matched pairs.

The direct-effect parameter psi solves the conditional score equation

    0 = sum_i (x_case_i - x_control_i) * exp(-psi * x_case_i - eta * m_case_i)

with eta plugged in from the conditional logistic fit.  For a binary
exposure the root is log(A/B) in closed form; otherwise a safeguarded
Newton iteration inside a sign-change bracket finds it.

The variance stacks the score equation on top of the clogit score and
applies the usual M-estimation sandwich

    (1/n) * B^-1 Var(U_i) B^-T,   B = mean Jacobian dU_i/dtheta,

with theta ordered (psi, delta, eta, beta...).  Because the clogit block
does not depend on psi the bread is block triangular, which is exactly
what propagates the eta-stage uncertainty into the psi variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtri

from .clogit import ClogitFit, clogit_fit
from .data import MatchedDataset, pair_differences
from .errors import FitError, NonIdentifiedError

EXPONENT_GUARD = 700.0  # double precision overflows just past exp(709)
SCORE_RTOL = 1e-10
BRACKET_WIDTH_TOL = 1e-12
MAX_BRACKET_EXPANSIONS = 200
PREVALENCE_WARN_LEVEL = 0.05


@dataclass(frozen=True)
class Theta:
    """Stacked parameter (psi, delta, eta, beta...); ordering fixed for all
    matrix work."""

    psi: float
    delta: float
    eta: float
    beta: tuple[float, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.array([self.psi, self.delta, self.eta, *self.beta], dtype=float)

    @classmethod
    def from_clogit(cls, psi: float, fit: ClogitFit) -> "Theta":
        return cls(psi, fit.params.delta, fit.params.eta, fit.params.beta)


@dataclass(frozen=True)
class DirectEffectEstimate:
    psi_hat: float
    variance: float
    se: float
    ci_level: float
    ci_low: float
    ci_high: float
    rr: float
    rr_ci_low: float
    rr_ci_high: float
    eta_hat: float
    n_pairs: int
    warnings: tuple[str, ...]
    clogit: ClogitFit


def _score_terms(dataset: MatchedDataset, psi: float, eta: float) -> np.ndarray:
    if not (math.isfinite(psi) and math.isfinite(eta)):
        raise FitError("non-finite parameters")
    exponent = -psi * dataset.x_case - eta * dataset.m_case
    if exponent.size and np.max(np.abs(exponent)) > EXPONENT_GUARD:
        raise FitError("score overflow")
    return (dataset.x_case - dataset.x_control) * np.exp(exponent)


def gest_score(dataset: MatchedDataset, psi: float, eta: float) -> float:
    """Value of the conditional score at (psi, eta)."""
    return float(np.sum(_score_terms(dataset, psi, eta)))


def _check_sign_variation(dx: np.ndarray) -> None:
    if not (np.any(dx > 0) and np.any(dx < 0)):
        raise NonIdentifiedError(
            "nonidentified: exposure differences have no sign variation"
        )


def _closed_form_psi(dataset: MatchedDataset, eta: float) -> float:
    dx = dataset.x_case - dataset.x_control
    exponent = -eta * dataset.m_case
    if exponent.size and np.max(np.abs(exponent)) > EXPONENT_GUARD:
        raise FitError("score overflow")
    weight = np.exp(exponent)
    a = float(np.sum(weight[dx > 0]))
    b = float(np.sum(weight[dx < 0]))
    return math.log(a / b)


def _solve_root(dataset: MatchedDataset, eta: float) -> float:
    """Safeguarded Newton inside a geometrically expanded sign-change bracket."""

    def f_and_scale(psi: float) -> tuple[float, float]:
        terms = _score_terms(dataset, psi, eta)
        return float(np.sum(terms)), float(np.sum(np.abs(terms)))

    def fprime(psi: float) -> float:
        terms = _score_terms(dataset, psi, eta)
        return float(np.sum(-dataset.x_case * terms))

    # Largest |psi| the overflow guard leaves room for.
    x1_max = float(np.max(np.abs(dataset.x_case))) if dataset.n_pairs else 0.0
    m_term = float(np.max(np.abs(eta * dataset.m_case))) if dataset.n_pairs else 0.0
    psi_cap = (EXPONENT_GUARD - 1.0 - m_term) / x1_max if x1_max > 0 else math.inf

    lo, hi = -1.0, 1.0
    lo, hi = max(lo, -psi_cap), min(hi, psi_cap)
    f_lo, scale_lo = f_and_scale(lo)
    f_hi, scale_hi = f_and_scale(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    expansions = 0
    while (f_lo > 0) == (f_hi > 0):
        if expansions >= MAX_BRACKET_EXPANSIONS or (lo == -psi_cap and hi == psi_cap):
            raise FitError("no root in expanded bracket")
        lo = max(lo * 2.0, -psi_cap)
        hi = min(hi * 2.0, psi_cap)
        f_lo, scale_lo = f_and_scale(lo)
        f_hi, scale_hi = f_and_scale(hi)
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        expansions += 1

    x, fx, scale = (lo, f_lo, scale_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi, scale_hi)
    last_move = math.inf
    for _ in range(200):
        # A small score alone can leave the root several ulps-of-slope away,
        # so also require the Newton step to have collapsed (or the bracket).
        score_ok = abs(fx) <= SCORE_RTOL * scale
        step_ok = last_move <= 1e-11 * max(1.0, abs(x))
        if (score_ok and step_ok) or (hi - lo) < BRACKET_WIDTH_TOL:
            return x
        dfx = fprime(x)
        if dfx != 0.0 and math.isfinite(dfx):
            candidate = x - fx / dfx
        else:
            candidate = math.nan
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)  # bisection safeguard
        f_cand, scale = f_and_scale(candidate)
        if f_cand == 0.0:
            return candidate
        if (f_lo > 0) != (f_cand > 0):
            hi, f_hi = candidate, f_cand
        else:
            lo, f_lo = candidate, f_cand
        last_move = abs(candidate - x)
        x, fx = candidate, f_cand
    raise FitError("nonconvergence: root refinement did not reach tolerance")


def solve_psi(dataset: MatchedDataset, eta: float, method: str = "auto") -> float:
    """Root of the conditional score in psi at the supplied eta.

    ``method`` picks between the binary-exposure closed form and the
    general root finder; "auto" uses the closed form whenever every
    exposure value is 0 or 1.
    """
    if method not in ("auto", "closed", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    if not math.isfinite(eta):
        raise FitError("non-finite parameters")
    dx = dataset.x_case - dataset.x_control
    _check_sign_variation(dx)
    binary = bool(
        np.all(np.isin(dataset.x_case, (0.0, 1.0)))
        and np.all(np.isin(dataset.x_control, (0.0, 1.0)))
    )
    if method == "closed" and not binary:
        raise FitError("closed form requires a 0/1 exposure")
    if method == "closed" or (method == "auto" and binary):
        return _closed_form_psi(dataset, eta)
    return _solve_root(dataset, eta)


def stacked_u(dataset: MatchedDataset, theta: Theta) -> np.ndarray:
    """Per-pair stacked estimating-function contributions, shape (n, p).

    Column 0 is the direct-effect score term; the remaining columns are
    the clogit score contributions for (delta, eta, beta...).
    """
    diffs = pair_differences(dataset)
    u_psi = _score_terms(dataset, theta.psi, theta.eta)
    design = diffs.design_matrix()
    coef = np.array([theta.delta, theta.eta, *theta.beta], dtype=float)
    if coef.shape[0] != design.shape[1]:
        raise FitError(
            f"theta has {coef.shape[0]} clogit coefficients, data needs {design.shape[1]}"
        )
    if not np.all(np.isfinite(coef)):
        raise FitError("non-finite parameters")
    u_clogit = design * expit(-(design @ coef))[:, None]
    return np.column_stack([u_psi, u_clogit])


def _mean_jacobian(dataset: MatchedDataset, theta: Theta) -> np.ndarray:
    """Sample average of the analytic dU_i/dtheta matrix."""
    diffs = pair_differences(dataset)
    design = diffs.design_matrix()
    n, k = design.shape
    p = k + 1
    u_psi = _score_terms(dataset, theta.psi, theta.eta)
    jac = np.zeros((p, p))
    jac[0, 0] = np.mean(-dataset.x_case * u_psi)
    jac[0, 2] = np.mean(-dataset.m_case * u_psi)
    coef = np.array([theta.delta, theta.eta, *theta.beta], dtype=float)
    s = design @ coef
    w = expit(s) * expit(-s)
    jac[1:, 1:] = -(design * w[:, None]).T @ design / n
    return jac


def sandwich_variance(dataset: MatchedDataset, theta: Theta) -> np.ndarray:
    """Covariance matrix for theta_hat; entry [0, 0] is the psi variance."""
    n = dataset.n_pairs
    if n < 2:
        raise FitError("variance unavailable: need at least two pairs")
    u = stacked_u(dataset, theta)
    meat = np.atleast_2d(np.cov(u, rowvar=False, ddof=1))
    if not meat.any():
        # Identical contributions: zero spread stays zero through any bread.
        zero = np.zeros_like(meat)
        zero.flags.writeable = False
        return zero
    bread = _mean_jacobian(dataset, theta)
    try:
        bread_inv = np.linalg.inv(bread)
    except np.linalg.LinAlgError:
        raise FitError("variance unavailable: singular bread matrix") from None
    cov = bread_inv @ meat @ bread_inv.T / n
    cov = (cov + cov.T) / 2.0
    cov.flags.writeable = False
    return cov


def estimate_direct_effect(
    dataset: MatchedDataset,
    ci_level: float = 0.95,
    prevalence_hint: float | None = None,
) -> DirectEffectEstimate:
    """Full pipeline: clogit for eta, score root for psi, stacked sandwich.

    Errors carry the failing stage in their message.  A cohort-prevalence
    hint above 5% stores a warning: the score equation leans on controls
    resembling the source population.
    """
    if not 0.0 < ci_level < 1.0:
        raise ValueError("ci_level must be in (0, 1)")

    # The exposure-difference requirement belongs to the solve stage, but
    # checking it first gives the error that actually matters instead of a
    # clogit complaint about the same degenerate column.
    try:
        _check_sign_variation(dataset.x_case - dataset.x_control)
    except FitError as exc:
        raise type(exc)(f"solve: {exc}") from None

    diffs = pair_differences(dataset)
    try:
        fit = clogit_fit(diffs)
    except FitError as exc:
        raise type(exc)(f"clogit: {exc}") from None
    try:
        psi_hat = solve_psi(dataset, fit.params.eta)
    except FitError as exc:
        raise type(exc)(f"solve: {exc}") from None
    theta = Theta.from_clogit(psi_hat, fit)
    try:
        cov = sandwich_variance(dataset, theta)
    except FitError as exc:
        raise type(exc)(f"variance: {exc}") from None

    variance = max(float(cov[0, 0]), 0.0)
    se = math.sqrt(variance)
    z = float(ndtri(0.5 + ci_level / 2.0))
    ci_low = psi_hat - z * se
    ci_high = psi_hat + z * se

    warnings: list[str] = []
    if prevalence_hint is not None and prevalence_hint > PREVALENCE_WARN_LEVEL:
        warnings.append(
            f"cohort prevalence {prevalence_hint:.3f} exceeds "
            f"{PREVALENCE_WARN_LEVEL:.2f}; the rare-disease approximation "
            "behind the score equation may be poor"
        )

    return DirectEffectEstimate(
        psi_hat=psi_hat,
        variance=variance,
        se=se,
        ci_level=ci_level,
        ci_low=ci_low,
        ci_high=ci_high,
        rr=math.exp(psi_hat),
        rr_ci_low=math.exp(ci_low),
        rr_ci_high=math.exp(ci_high),
        eta_hat=fit.params.eta,
        n_pairs=dataset.n_pairs,
        warnings=tuple(warnings),
        clogit=fit,
    )


# -- rendering ---------------------------------------------------------


def estimate_text(est: DirectEffectEstimate, covariate_names=()) -> str:
    pct = f"{est.ci_level * 100:g}%"
    lines = [
        f"direct effect, G-estimation ({est.n_pairs} pairs)",
        f"  psi_hat {est.psi_hat:+.6f}   se {est.se:.6f}",
        f"  {pct} CI (log scale)       [{est.ci_low:+.6f}, {est.ci_high:+.6f}]",
        f"  relative risk {est.rr:.4f}   {pct} CI [{est.rr_ci_low:.4f}, {est.rr_ci_high:.4f}]",
        f"  eta_hat {est.eta_hat:+.6f}",
        "naive conditional logistic fit (for comparison)",
    ]
    ses = est.clogit.standard_errors()
    names = ["delta (exposure)", "eta (mediator)"] + [
        f"beta[{name}]" for name in covariate_names
    ]
    values = est.clogit.params.as_array()
    for i, name in enumerate(names[: len(values)]):
        lines.append(f"  {name:<18} {values[i]:+.6f}   se {ses[i]:.6f}")
    for w in est.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def estimate_kv(est: DirectEffectEstimate, covariate_names=()) -> str:
    items: list[tuple[str, object]] = [
        ("psi_hat", est.psi_hat),
        ("se", est.se),
        ("ci_low", est.ci_low),
        ("ci_high", est.ci_high),
        ("rr", est.rr),
        ("rr_ci_low", est.rr_ci_low),
        ("rr_ci_high", est.rr_ci_high),
        ("eta_hat", est.eta_hat),
        ("n_pairs", est.n_pairs),
        ("warnings", " | ".join(est.warnings)),
        ("ci_level", est.ci_level),
        ("clogit_delta", est.clogit.params.delta),
        ("clogit_eta", est.clogit.params.eta),
    ]
    ses = est.clogit.standard_errors()
    items.append(("clogit_delta_se", float(ses[0])))
    items.append(("clogit_eta_se", float(ses[1])))
    for i, name in enumerate(covariate_names):
        items.append((f"clogit_beta_{name}", est.clogit.params.beta[i]))
        items.append((f"clogit_beta_{name}_se", float(ses[2 + i])))
    lines = []
    for key, value in items:
        if isinstance(value, float):
            lines.append(f"{key} {value!r}")
        else:
            lines.append(f"{key} {value}")
    return "\n".join(lines) + "\n"
