"""Turn raw interaction evidence into (confidence, outcome) pairs.

Confidence is the geometric mean of token probabilities (exp of the mean
natural-log probability). The outcome label comes from the preserved ratio,
1 - Levenshtein(expected, generated) / max(lengths), thresholded at 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from calibcc.telemetry import InteractionRecord, LanguageTag


class LabelingError(ValueError):
    """Raised when evidence cannot be turned into a labeled observation."""


@dataclass(frozen=True)
class LabeledObservation:
    """A (confidence, ratio, label) triple with stream keys passed through."""

    confidence: float
    ratio: float
    label: int
    user_id: str = ""
    project_id: str | None = None
    language: LanguageTag | None = None
    timestamp_ms: int = 0


def sequence_confidence(token_logprobs) -> float:
    """Geometric-mean confidence of a token sequence.

    Takes per-token natural-log probabilities (all finite, <= 0) and returns
    exp(mean), which lies in (0, 1].
    """
    logprobs = list(token_logprobs)
    if not logprobs:
        raise LabelingError("token_logprobs must be nonempty")
    for lp in logprobs:
        if not math.isfinite(lp) or lp > 0:
            raise LabelingError(f"token log-probability {lp!r} must be finite and <= 0")
    return math.exp(math.fsum(logprobs) / len(logprobs))


def levenshtein(a: str, b: str) -> int:
    """Minimum single-character insertions/deletions/substitutions from a to b."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,  # deletion
                    current[j - 1] + 1,  # insertion
                    previous[j - 1] + (ca != cb),  # substitution
                )
            )
        previous = current
    return previous[-1]


def preserved_ratio(expected: str, generated: str) -> float:
    """Character-level preserved ratio: 1 - L(expected, generated) / max(lengths).

    Both strings empty is an error: an empty expected completion signals a
    corrupt corpus row, and the ratio would be 0/0.
    """
    longest = max(len(expected), len(generated))
    if longest == 0:
        raise LabelingError("preserved ratio undefined: both strings empty")
    return 1.0 - levenshtein(expected, generated) / longest


def binarize(ratio: float) -> int:
    """Threshold a preserved ratio to a binary label: 1 iff ratio >= 0.5."""
    if not (0.0 <= ratio <= 1.0):
        raise LabelingError(f"ratio {ratio!r} out of range [0, 1]")
    return 1 if ratio >= 0.5 else 0


def label_record(record: InteractionRecord) -> LabeledObservation:
    """Derive the labeled observation from a validated interaction record.

    Confidence: raw_confidence if present, else the geometric mean of
    token_logprobs. Ratio: preserved_ratio if present, else computed from
    final_text vs suggestion_text, else the outcome's value (so downstream
    continuous metrics stay total). Label: outcome if present, else the
    thresholded ratio.
    """
    if record.raw_confidence is not None:
        confidence = record.raw_confidence
    else:
        confidence = sequence_confidence(record.token_logprobs)

    if record.preserved_ratio is not None:
        ratio = record.preserved_ratio
    elif record.final_text is not None:
        ratio = preserved_ratio(record.final_text, record.suggestion_text)
    else:
        ratio = float(record.outcome)

    label = record.outcome if record.outcome is not None else binarize(ratio)
    return LabeledObservation(
        confidence=confidence,
        ratio=ratio,
        label=label,
        user_id=record.user_id,
        project_id=record.project_id,
        language=record.language,
        timestamp_ms=record.timestamp_ms,
    )
