"""Online calibration engine: keyed streams, windowed progressive validation,
warm-started incremental refit, and activity segmentation.

Each window is scored with the calibrator and base-rate reference exactly as
they existed before the window (evaluate, then adapt), producing a
leakage-free metric time series per stream.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from calibcc.calibration import PlattParams, calibrate, fit_platt
from calibcc.labeling import LabeledObservation
from calibcc.metrics import BaseRateReference, MetricReport, reference_update, report

DEFAULT_WINDOW = 100
DEFAULT_MIN_EVAL = 20
DEFAULT_HISTORY = 1000
DEFAULT_PRIOR_COUNT = 50.0


class ReplayError(ValueError):
    """Raised on invalid replay inputs (unordered stream, bad window size)."""


@dataclass
class StreamState:
    """Per-stream calibrator, bounded history, and base-rate reference."""

    key: str
    params: PlattParams
    reference: BaseRateReference
    history: deque = field(default_factory=lambda: deque(maxlen=DEFAULT_HISTORY))
    observed: int = 0


def init_stream(
    key: str,
    init_params: PlattParams,
    ref_mean: float,
    ref_pseudo_count: float = DEFAULT_PRIOR_COUNT,
    history_capacity: int = DEFAULT_HISTORY,
) -> StreamState:
    """Fresh stream state: empty history, seeded reference, given calibrator."""
    return StreamState(
        key=key,
        params=init_params,
        reference=BaseRateReference.from_mean(ref_mean, ref_pseudo_count),
        history=deque(maxlen=history_capacity),
    )


@dataclass(frozen=True)
class WindowMetrics:
    """One evaluated window of a stream's metric time series."""

    window_index: int
    t_end: int
    metrics: MetricReport
    n_window: int


@dataclass(frozen=True)
class AuditEntry:
    """Lookahead evidence for one window: which data the predictor had seen."""

    window_index: int
    window_start: int  # global index of the window's first observation
    params_trained_through: int  # observations seen by the predicting params (exclusive)


@dataclass
class ReplayAudit:
    """Audit log of a replay, consumed by no_lookahead_check."""

    entries: list[AuditEntry] = field(default_factory=list)


def no_lookahead_check(audit: ReplayAudit) -> bool:
    """True iff every window's predictions used only data from before the window."""
    return all(e.params_trained_through <= e.window_start for e in audit.entries)


def replay(
    stream: Sequence[LabeledObservation],
    state: StreamState,
    k: int = DEFAULT_WINDOW,
    step: int | None = None,
    min_eval: int = DEFAULT_MIN_EVAL,
    adapt: bool = True,
    bin_count: int = 10,
    l2: float = 1e-6,
    audit: ReplayAudit | None = None,
) -> list[WindowMetrics]:
    """Progressive validation over one time-ordered stream.

    Windows of up to k observations advance by step (default k, tumbling).
    Each window is (i) predicted with the pre-window calibrator, (ii) scored
    against the pre-window reference, then (iii) the reference absorbs the
    window's outcomes and (iv) the calibrator is refit, warm-started, over
    the bounded history including the window. A trailing partial window is
    evaluated only if it has at least min_eval observations; it always
    adapts the model.
    """
    if k < 1 or (step is not None and step < 1):
        raise ReplayError("window size and stride must be >= 1")
    if step is None:
        step = k
    timestamps = [o.timestamp_ms for o in stream]
    if any(t2 < t1 for t1, t2 in zip(timestamps, timestamps[1:])):
        raise ReplayError("stream observations must be time-ordered")

    results: list[WindowMetrics] = []
    n = len(stream)
    window_index = 0
    for start in range(0, n, step):
        window = stream[start : start + k]
        confs = np.array([o.confidence for o in window], dtype=float)
        labels = np.array([o.label for o in window], dtype=float)
        if audit is not None:
            audit.entries.append(
                AuditEntry(
                    window_index=window_index,
                    window_start=start,
                    params_trained_through=state.observed,
                )
            )
        if len(window) >= min_eval:
            preds = calibrate(state.params, confs)
            results.append(
                WindowMetrics(
                    window_index=window_index,
                    t_end=window[-1].timestamp_ms,
                    metrics=report(preds, labels, state.reference, bin_count),
                    n_window=len(window),
                )
            )
        state.reference = reference_update(state.reference, labels)
        state.history.extend(zip(confs.tolist(), labels.tolist()))
        state.observed = start + len(window)
        if adapt:
            hist_conf = np.array([c for c, _ in state.history], dtype=float)
            hist_label = np.array([y for _, y in state.history], dtype=float)
            state.params = fit_platt((hist_conf, hist_label), init=state.params, l2=l2)
        window_index += 1
    return results


def segment_streams(counts: dict[str, int]) -> dict[str, str]:
    """Tercile activity segmentation by record count: low / average / high.

    Streams tied in count with a lower-tercile stream fall into the lower
    group, so equal-count streams never straddle a boundary.
    """
    if not counts:
        raise ReplayError("cannot segment an empty stream map")
    ordered = sorted(counts.items(), key=lambda kv: (kv[1], kv[0]))
    n = len(ordered)
    t1 = math.ceil(n / 3)
    t2 = math.ceil(2 * n / 3)
    groups: dict[str, str] = {}
    levels = ["low", "average", "high"]
    prev_count: int | None = None
    prev_level_idx = 0
    for pos, (key, count) in enumerate(ordered):
        level_idx = 0 if pos < t1 else (1 if pos < t2 else 2)
        if prev_count is not None and count == prev_count:
            level_idx = min(level_idx, prev_level_idx)
        groups[key] = levels[level_idx]
        prev_count, prev_level_idx = count, level_idx
    return groups


METRIC_NAMES = ("ece", "brier", "bss", "mce")


@dataclass(frozen=True)
class AggregateRow:
    """Mean and sample std of each metric across streams, per activity group."""

    group: str  # "all", "low", "average", or "high"
    n_streams: int
    mean: dict[str, float]
    std: dict[str, float]
    single_stream: bool


def _stream_means(windows: Sequence[WindowMetrics]) -> dict[str, float] | None:
    if not windows:
        return None
    return {
        name: float(np.mean([getattr(w.metrics, name) for w in windows])) for name in METRIC_NAMES
    }


def aggregate(
    per_stream: dict[str, Sequence[WindowMetrics]],
    grouping: dict[str, str] | None = None,
) -> list[AggregateRow]:
    """Equal-weight per-stream aggregation: each stream is first averaged over
    its windows, then mean and sample standard deviation are taken across
    streams, overall and (when a grouping is given) per activity group."""
    means = {key: m for key, ws in per_stream.items() if (m := _stream_means(ws)) is not None}
    if not means:
        raise ReplayError("no evaluated windows to aggregate")

    def row(group: str, keys: list[str]) -> AggregateRow:
        values = {name: [means[k][name] for k in keys] for name in METRIC_NAMES}
        return AggregateRow(
            group=group,
            n_streams=len(keys),
            mean={name: float(np.mean(v)) for name, v in values.items()},
            std={
                name: (float(np.std(v, ddof=1)) if len(v) > 1 else 0.0)
                for name, v in values.items()
            },
            single_stream=len(keys) == 1,
        )

    rows = [row("all", sorted(means))]
    if grouping is not None:
        for level in ("low", "average", "high"):
            keys = sorted(k for k in means if grouping.get(k) == level)
            if keys:
                rows.append(row(level, keys))
    return rows
