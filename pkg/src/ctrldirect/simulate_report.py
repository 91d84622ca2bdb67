"""Calibration-report container for replicated simulation studies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ReplicateRow:
    """Outcome of one replicate: estimates, or the error that stopped it."""

    rep: int
    psi_hat: float = math.nan
    se: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    delta_hat: float = math.nan
    eta_hat: float = math.nan
    n_pairs: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CalibrationReport:
    """Replicate-level results plus pooled summaries.

    The identity fields accumulate the direct-effect score terms evaluated
    at the true (psi, gamma); their pooled mean should sit within Monte
    Carlo noise of zero when the sampler and estimator agree.
    """

    psi_true: float
    gamma_true: float
    seed: int
    rng: str
    rows: tuple[ReplicateRow, ...]
    identity_sum: float
    identity_sumsq: float
    identity_n: int

    # -- accessors -----------------------------------------------------

    def _ok_values(self, attr: str) -> list[float]:
        return [getattr(r, attr) for r in self.rows if r.ok]

    @property
    def n_reps(self) -> int:
        return len(self.rows)

    @property
    def n_ok(self) -> int:
        return sum(1 for r in self.rows if r.ok)

    @property
    def failures(self) -> tuple[ReplicateRow, ...]:
        return tuple(r for r in self.rows if not r.ok)

    @property
    def mean_psi_hat(self) -> float:
        vals = self._ok_values("psi_hat")
        return sum(vals) / len(vals) if vals else math.nan

    @property
    def bias_psi(self) -> float:
        return self.mean_psi_hat - self.psi_true

    @property
    def mean_delta_hat(self) -> float:
        vals = self._ok_values("delta_hat")
        return sum(vals) / len(vals) if vals else math.nan

    @property
    def bias_delta(self) -> float:
        return self.mean_delta_hat - self.psi_true

    @property
    def sd_psi_hat(self) -> float | None:
        vals = self._ok_values("psi_hat")
        if len(vals) < 2:
            return None
        mean = sum(vals) / len(vals)
        return math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1))

    @property
    def mean_se(self) -> float:
        vals = self._ok_values("se")
        return sum(vals) / len(vals) if vals else math.nan

    @property
    def coverage(self) -> float | None:
        """Fraction of replicate CIs containing the true psi; None when a
        single replicate makes the statistic meaningless."""
        hits = [
            1.0 if r.ci_low <= self.psi_true <= r.ci_high else 0.0
            for r in self.rows
            if r.ok
        ]
        if len(hits) < 2:
            return None
        return sum(hits) / len(hits)

    @property
    def identity_mean(self) -> float:
        return self.identity_sum / self.identity_n if self.identity_n else math.nan

    @property
    def identity_se(self) -> float:
        """Monte Carlo standard error of the pooled identity mean."""
        if self.identity_n < 2:
            return math.nan
        var = (
            self.identity_sumsq - self.identity_sum**2 / self.identity_n
        ) / (self.identity_n - 1)
        return math.sqrt(max(var, 0.0) / self.identity_n)

    # -- rendering -------------------------------------------------------

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            [
                "rep",
                "status",
                "psi_hat",
                "se",
                "ci_low",
                "ci_high",
                "delta_hat",
                "eta_hat",
                "n_pairs",
                "error",
            ]
        )
        for r in self.rows:
            writer.writerow(
                [
                    r.rep,
                    "ok" if r.ok else "failed",
                    repr(r.psi_hat),
                    repr(r.se),
                    repr(r.ci_low),
                    repr(r.ci_high),
                    repr(r.delta_hat),
                    repr(r.eta_hat),
                    r.n_pairs,
                    r.error or "",
                ]
            )
        return out.getvalue()

    def summary_text(self) -> str:
        lines = [
            f"calibration over {self.n_reps} replicate(s), rng {self.rng}, seed {self.seed}",
            f"  ok {self.n_ok}, failed {self.n_reps - self.n_ok}",
            f"  true psi {self.psi_true:+.6f} (rr {math.exp(self.psi_true):.4f})",
        ]
        if self.n_ok:
            lines.append(
                f"  psi_hat mean {self.mean_psi_hat:+.6f}   bias {self.bias_psi:+.6f}"
            )
            lines.append(
                f"  naive clogit delta mean {self.mean_delta_hat:+.6f}   "
                f"bias {self.bias_delta:+.6f}"
            )
            if self.sd_psi_hat is not None:
                lines.append(
                    f"  empirical sd {self.sd_psi_hat:.6f}   mean sandwich se {self.mean_se:.6f}"
                )
            if self.coverage is not None:
                lines.append(f"  CI coverage of true psi {self.coverage:.3f}")
        if self.identity_n:
            lines.append(
                f"  score identity at truth: mean {self.identity_mean:+.2e} "
                f"(mc se {self.identity_se:.2e}, n {self.identity_n})"
            )
        for r in self.failures:
            lines.append(f"  replicate {r.rep} failed: {r.error}")
        return "\n".join(lines) + "\n"
