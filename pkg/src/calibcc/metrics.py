"""Calibration evaluation: binned reliability, ECE, Brier, BSS, MCE, correlation.

Bins are M equal-width intervals over [0, 1]; the last bin is closed above so
confidence 1.0 is representable. The skill-score reference is the naive
forecaster that always predicts the historical average acceptance rate,
maintained as a Beta posterior.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricsError(ValueError):
    """Raised on invalid metric inputs."""


class PerfectReferenceError(MetricsError):
    """The reference forecast has zero Brier score; BSS is undefined."""


@dataclass
class BinnedReliability:
    """Per-bin counts, confidence sums, and outcome sums over M equal-width bins."""

    bin_count: int
    counts: np.ndarray
    conf_sums: np.ndarray
    outcome_sums: np.ndarray

    @property
    def n(self) -> int:
        return int(np.sum(self.counts))

    def mean_confidence(self) -> np.ndarray:
        """Per-bin mean confidence; NaN for empty bins."""
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.conf_sums / np.maximum(self.counts, 1), np.nan)

    def mean_outcome(self) -> np.ndarray:
        """Per-bin mean outcome; NaN for empty bins."""
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.outcome_sums / np.maximum(self.counts, 1), np.nan)

    def merge(self, other: "BinnedReliability") -> "BinnedReliability":
        """Associative merge for parallel aggregation."""
        if other.bin_count != self.bin_count:
            raise MetricsError("cannot merge reliabilities with different bin counts")
        return BinnedReliability(
            bin_count=self.bin_count,
            counts=self.counts + other.counts,
            conf_sums=self.conf_sums + other.conf_sums,
            outcome_sums=self.outcome_sums + other.outcome_sums,
        )

    def rows(self) -> list[dict]:
        """Nonempty-bin rows for the reliability-diagram CSV export."""
        mc = self.mean_confidence()
        mo = self.mean_outcome()
        out = []
        for m in range(self.bin_count):
            if self.counts[m] == 0:
                continue
            out.append(
                {
                    "bin_low": m / self.bin_count,
                    "bin_high": (m + 1) / self.bin_count,
                    "count": int(self.counts[m]),
                    "mean_confidence": float(mc[m]),
                    "mean_outcome": float(mo[m]),
                }
            )
        return out


@dataclass(frozen=True)
class BaseRateReference:
    """Beta posterior over the acceptance rate; predicts its posterior mean."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise MetricsError("alpha and beta must be positive")

    @staticmethod
    def from_mean(mean: float, pseudo_count: float = 50.0) -> "BaseRateReference":
        """Seed the reference from a prior mean and total pseudo-count."""
        if not (0.0 < mean < 1.0):
            raise MetricsError("prior mean must lie in (0, 1)")
        return BaseRateReference(alpha=mean * pseudo_count, beta=(1.0 - mean) * pseudo_count)


def reference_predict(ref: BaseRateReference) -> float:
    """Posterior mean acceptance rate: alpha / (alpha + beta)."""
    return ref.alpha / (ref.alpha + ref.beta)


def reference_update(ref: BaseRateReference, outcomes) -> BaseRateReference:
    """Bayesian-update the reference with a window of binary outcomes."""
    arr = np.asarray(outcomes, dtype=float)
    successes = float(np.sum(arr))
    return BaseRateReference(alpha=ref.alpha + successes, beta=ref.beta + (arr.size - successes))


@dataclass(frozen=True)
class MetricReport:
    """One row of the evaluation table: ECE, Brier, BSS, MCE, correlation, N."""

    ece: float
    brier: float
    bss: float
    mce: float
    correlation: float | None
    n: int


def _validate_pair(preds, outcomes) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=float)
    y = np.asarray(outcomes, dtype=float)
    if p.shape != y.shape:
        raise MetricsError("prediction/outcome length mismatch")
    if p.size == 0:
        raise MetricsError("empty input")
    return p, y


def bin_predictions(preds, outcomes, bin_count: int = 10) -> BinnedReliability:
    """Assign each prediction to one of M equal-width bins over [0, 1]."""
    p, y = _validate_pair(preds, outcomes)
    if bin_count < 1:
        raise MetricsError("bin_count must be >= 1")
    idx = np.minimum((p * bin_count).astype(int), bin_count - 1)
    counts = np.bincount(idx, minlength=bin_count).astype(np.int64)
    conf_sums = np.bincount(idx, weights=p, minlength=bin_count)
    outcome_sums = np.bincount(idx, weights=y, minlength=bin_count)
    return BinnedReliability(bin_count, counts, conf_sums, outcome_sums)


def ece(b: BinnedReliability) -> float:
    """Bin-weighted mean absolute gap between mean outcome and mean confidence."""
    n = b.n
    if n < 1:
        raise MetricsError("empty reliability")
    nonempty = b.counts > 0
    # weight per-bin mean gaps so the arithmetic matches mce exactly
    gaps = np.abs(b.mean_outcome()[nonempty] - b.mean_confidence()[nonempty])
    return float(np.sum(b.counts[nonempty] / n * gaps))


def mce(b: BinnedReliability) -> float:
    """Worst-case per-bin absolute gap over nonempty bins."""
    nonempty = b.counts > 0
    if not np.any(nonempty):
        raise MetricsError("all bins empty")
    gaps = np.abs(b.mean_outcome()[nonempty] - b.mean_confidence()[nonempty])
    return float(np.max(gaps))


def brier(preds, outcomes) -> float:
    """Mean squared error of probabilistic predictions against outcomes."""
    p, y = _validate_pair(preds, outcomes)
    return float(np.mean((p - y) ** 2))


def bss(bs_x: float, bs_y: float) -> float:
    """Brier Skill Score: 1 - BS_x / BS_y; positive means x beats reference y."""
    if bs_y == 0.0:
        raise PerfectReferenceError("reference forecast is already perfect (BS_y = 0)")
    return 1.0 - bs_x / bs_y


def correlation(preds, outcomes) -> float | None:
    """Pearson (point-biserial) correlation; None when either side is constant."""
    p, y = _validate_pair(preds, outcomes)
    if p.size < 2:
        raise MetricsError("correlation needs at least 2 observations")
    if np.ptp(p) == 0.0 or np.ptp(y) == 0.0:
        return None
    return float(np.corrcoef(p, y)[0, 1])


def report(preds, outcomes, ref: BaseRateReference, bin_count: int = 10) -> MetricReport:
    """Full metric row; BSS compares against the constant base-rate forecast."""
    p, y = _validate_pair(preds, outcomes)
    binned = bin_predictions(p, y, bin_count)
    rate = reference_predict(ref)
    bs_model = brier(p, y)
    bs_ref = brier(np.full(p.shape, rate), y)
    return MetricReport(
        ece=ece(binned),
        brier=bs_model,
        bss=bss(bs_model, bs_ref),
        mce=mce(binned),
        correlation=correlation(p, y) if p.size >= 2 else None,
        n=int(p.size),
    )


RELIABILITY_COLUMNS = ["bin_low", "bin_high", "count", "mean_confidence", "mean_outcome"]


def write_reliability_csv(b: BinnedReliability, path: str | Path) -> None:
    """Reliability-diagram export: one CSV row per nonempty bin."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RELIABILITY_COLUMNS)
        writer.writeheader()
        for row in b.rows():
            writer.writerow(row)
