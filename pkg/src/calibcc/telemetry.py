"""Interaction-record data model, log parsing, ordering, and language tags.

Telemetry files are line-delimited JSON, one record per line, UTF-8.
Optional keys are omitted entirely (never null). Log-probabilities are
natural-log.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

KNOWN_LANGUAGES = frozenset({"java", "python", "kotlin"})

#: Reserved pseudo-project for records without a project_id, so that
#: per-user-per-project replay never drops data.
NO_PROJECT = "_none_"


class TelemetryError(Exception):
    """Base for telemetry ingestion failures."""


class ParseError(TelemetryError):
    """Malformed log line (bad JSON or wrong top-level type)."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class RecordValidationError(TelemetryError):
    """A record violates a field invariant."""

    def __init__(self, message: str, field_name: str | None = None, line_number: int | None = None):
        self.field_name = field_name
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class LanguageTag:
    """Normalized language tag: java/python/kotlin or an opaque 'other'."""

    value: str

    @property
    def is_known(self) -> bool:
        return self.value in KNOWN_LANGUAGES

    def __str__(self) -> str:
        return self.value


def normalize_language(raw: str | LanguageTag) -> LanguageTag:
    """Map a raw language string to its canonical tag.

    Jupyter-notebook Python ("jupyterpython") merges into python; java,
    python, and kotlin normalize case-insensitively; anything else passes
    through unchanged. Idempotent.
    """
    if isinstance(raw, LanguageTag):
        return raw
    lowered = raw.strip().lower()
    if lowered == "jupyterpython":
        return LanguageTag("python")
    if lowered in KNOWN_LANGUAGES:
        return LanguageTag(lowered)
    return LanguageTag(raw)


@dataclass(frozen=True)
class InteractionRecord:
    """One logged completion event: keys, confidence evidence, outcome evidence."""

    record_id: str
    timestamp_ms: int
    user_id: str
    suggestion_text: str
    language: LanguageTag
    project_id: str | None = None
    token_logprobs: tuple[float, ...] | None = None
    raw_confidence: float | None = None
    final_text: str | None = None
    preserved_ratio: float | None = None
    outcome: int | None = None

    def validate(self) -> None:
        """Check the record invariants; raise RecordValidationError on failure."""
        if self.token_logprobs is None and self.raw_confidence is None:
            raise RecordValidationError("no confidence evidence (need token_logprobs or raw_confidence)")
        if self.final_text is None and self.preserved_ratio is None and self.outcome is None:
            raise RecordValidationError("no outcome evidence (need final_text, preserved_ratio, or outcome)")
        if self.token_logprobs is not None:
            if len(self.token_logprobs) == 0:
                raise RecordValidationError("token_logprobs is empty", field_name="token_logprobs")
            for lp in self.token_logprobs:
                if not math.isfinite(lp) or lp > 0:
                    raise RecordValidationError(
                        f"token_logprobs entry {lp!r} must be finite and <= 0", field_name="token_logprobs"
                    )
        if self.raw_confidence is not None and not (0.0 < self.raw_confidence <= 1.0):
            raise RecordValidationError("raw_confidence out of range (0, 1]", field_name="raw_confidence")
        if self.preserved_ratio is not None and not (0.0 <= self.preserved_ratio <= 1.0):
            raise RecordValidationError("preserved_ratio out of range [0, 1]", field_name="preserved_ratio")
        if self.outcome is not None and self.outcome not in (0, 1):
            raise RecordValidationError("outcome must be 0 or 1", field_name="outcome")
        if not isinstance(self.timestamp_ms, int):
            raise RecordValidationError("timestamp_ms must be an integer", field_name="timestamp_ms")


_REQUIRED_KEYS = ("record_id", "timestamp_ms", "user_id", "language", "suggestion_text")


def parse_record(line: str, line_number: int | None = None) -> InteractionRecord:
    """Parse one telemetry log line into a validated InteractionRecord.

    Unknown keys are ignored; missing required keys or invariant violations
    raise RecordValidationError, malformed JSON raises ParseError.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed record: {exc.msg}", line_number=line_number) from exc
    if not isinstance(obj, dict):
        raise ParseError("record is not a key/value object", line_number=line_number)
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise RecordValidationError(f"missing required key {key!r}", field_name=key, line_number=line_number)
    logprobs = obj.get("token_logprobs")
    record = InteractionRecord(
        record_id=str(obj["record_id"]),
        timestamp_ms=obj["timestamp_ms"],
        user_id=str(obj["user_id"]),
        suggestion_text=str(obj["suggestion_text"]),
        language=normalize_language(str(obj["language"])),
        project_id=None if obj.get("project_id") is None else str(obj["project_id"]),
        token_logprobs=None if logprobs is None else tuple(float(x) for x in logprobs),
        raw_confidence=None if obj.get("raw_confidence") is None else float(obj["raw_confidence"]),
        final_text=None if obj.get("final_text") is None else str(obj["final_text"]),
        preserved_ratio=None if obj.get("preserved_ratio") is None else float(obj["preserved_ratio"]),
        outcome=None if obj.get("outcome") is None else int(obj["outcome"]),
    )
    try:
        record.validate()
    except RecordValidationError as exc:
        if line_number is not None and exc.line_number is None:
            raise RecordValidationError(str(exc), field_name=exc.field_name, line_number=line_number) from exc
        raise
    return record


def serialize_record(record: InteractionRecord) -> str:
    """Serialize a record to one telemetry line; optional keys are omitted."""
    obj: dict = {
        "record_id": record.record_id,
        "timestamp_ms": record.timestamp_ms,
        "user_id": record.user_id,
    }
    if record.project_id is not None:
        obj["project_id"] = record.project_id
    obj["language"] = record.language.value
    if record.token_logprobs is not None:
        obj["token_logprobs"] = list(record.token_logprobs)
    if record.raw_confidence is not None:
        obj["raw_confidence"] = record.raw_confidence
    obj["suggestion_text"] = record.suggestion_text
    if record.final_text is not None:
        obj["final_text"] = record.final_text
    if record.preserved_ratio is not None:
        obj["preserved_ratio"] = record.preserved_ratio
    if record.outcome is not None:
        obj["outcome"] = record.outcome
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def stream_key(record: InteractionRecord, keying: str) -> tuple[str, ...]:
    """Grouping key for a record under a keying mode.

    Modes: "per-user" groups by user_id; "per-user-per-project" groups by
    (user_id, project_id), with absent project_id mapped to the reserved
    pseudo-project so grouping is total.
    """
    if keying == "per-user":
        return (record.user_id,)
    if keying == "per-user-per-project":
        return (record.user_id, record.project_id if record.project_id is not None else NO_PROJECT)
    raise ValueError(f"unknown keying mode {keying!r}")


@dataclass
class LoadResult:
    """Parsed telemetry: time-ordered records, optional grouping, skip count."""

    records: list[InteractionRecord]
    groups: dict[tuple[str, ...], list[InteractionRecord]] | None = None
    skipped: int = 0


def sort_records(records: Iterable[InteractionRecord]) -> list[InteractionRecord]:
    """Total order: ascending (timestamp_ms, record_id)."""
    return sorted(records, key=lambda r: (r.timestamp_ms, r.record_id))


def group_records(
    records: Sequence[InteractionRecord], keying: str
) -> dict[tuple[str, ...], list[InteractionRecord]]:
    """Group time-ordered records by stream key; rejects duplicate ids per group."""
    groups: dict[tuple[str, ...], list[InteractionRecord]] = {}
    seen: dict[tuple[str, ...], set[str]] = {}
    for record in records:
        key = stream_key(record, keying)
        bucket = groups.setdefault(key, [])
        ids = seen.setdefault(key, set())
        if record.record_id in ids:
            raise RecordValidationError(
                f"duplicate record_id {record.record_id!r} in group {key!r}", field_name="record_id"
            )
        ids.add(record.record_id)
        bucket.append(record)
    return groups


def load_stream(
    path: str | Path,
    key: str | None = None,
    skip_invalid: bool = False,
) -> LoadResult:
    """Load a telemetry file into time-ordered (and optionally grouped) records.

    Records sort ascending by (timestamp_ms, record_id). With key set to
    "per-user" or "per-user-per-project" the result also carries grouped
    streams. skip_invalid switches from fail-fast to skip-and-count for
    dirty logs; the skipped count is reported on the result.
    """
    path = Path(path)
    records: list[InteractionRecord] = []
    skipped = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(parse_record(line, line_number=line_number))
            except (ParseError, RecordValidationError):
                if not skip_invalid:
                    raise
                skipped += 1
    ordered = sort_records(records)
    groups = group_records(ordered, key) if key is not None else None
    return LoadResult(records=ordered, groups=groups, skipped=skipped)
