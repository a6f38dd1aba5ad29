"""Fill-in-the-middle corpus preparation: masking policies and context assembly.

Masked examples reconstruct their source file exactly (line terminators stay
with the middle span), and carry up to three auxiliary context files. No
model-specific FIM sentinel tokens are emitted; downstream runners insert
their own.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from calibcc.telemetry import LanguageTag, normalize_language

MAX_CONTEXT_FILES = 3


class CorpusError(ValueError):
    """Raised on unmaskable inputs or malformed example files."""


@dataclass(frozen=True)
class FimExample:
    """A prefix/middle/suffix split of one source file plus multi-file context."""

    prefix: str
    middle: str
    suffix: str
    language: LanguageTag
    source_path: str
    multifile_context: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.middle:
            raise CorpusError("middle span must be nonempty")
        if len(self.multifile_context) > MAX_CONTEXT_FILES:
            raise CorpusError(f"multifile_context capped at {MAX_CONTEXT_FILES} files")


@dataclass(frozen=True)
class MaskPolicyConfig:
    """Masking policy selection and its parameters."""

    policy: str = "random_line_span"
    max_span_lines: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.policy != "random_line_span":
            raise CorpusError(f"unknown masking policy {self.policy!r}")
        if self.max_span_lines < 1:
            raise CorpusError("max_span_lines must be >= 1")


def mask_random_line_span(
    file_text: str,
    cfg: MaskPolicyConfig,
    language: str | LanguageTag = "other",
    source_path: str = "",
    multifile_context: Sequence[tuple[str, str]] = (),
) -> FimExample:
    """Mask a uniformly chosen span of whole lines as the ground-truth middle.

    The start line is uniform over all lines; the span length is uniform in
    [1, min(max_span_lines, lines remaining)]. Line terminators belong to
    the middle, so prefix + middle + suffix reproduces the file byte for
    byte. Deterministic under a fixed seed.
    """
    lines = file_text.splitlines(keepends=True)
    if not lines or all(not line.strip() for line in lines):
        raise CorpusError("file is empty or all-blank; nothing to mask")
    rng = random.Random(cfg.seed)
    start = rng.randrange(len(lines))
    span = rng.randint(1, min(cfg.max_span_lines, len(lines) - start))
    return FimExample(
        prefix="".join(lines[:start]),
        middle="".join(lines[start : start + span]),
        suffix="".join(lines[start + span :]),
        language=normalize_language(language),
        source_path=source_path,
        multifile_context=tuple(multifile_context),
    )


def assemble_context(ex: FimExample) -> str:
    """Flatten an example into a single model-agnostic prompt context.

    Layout: each context file under a "### FILE <path>" header in caller
    order, then the prefix under "### PREFIX" and the suffix under
    "### SUFFIX". Downstream runners splice in their own FIM sentinels.
    """
    parts: list[str] = []
    for path, content in ex.multifile_context:
        parts.append(f"### FILE {path}\n{content}\n")
    parts.append(f"### PREFIX\n{ex.prefix}\n")
    parts.append(f"### SUFFIX\n{ex.suffix}\n")
    return "".join(parts)


def export_examples(examples: Iterable[FimExample], path: str | Path) -> int:
    """Write examples as line-delimited JSON; returns the number written."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "source_path": ex.source_path,
                        "language": ex.language.value,
                        "prefix": ex.prefix,
                        "middle": ex.middle,
                        "suffix": ex.suffix,
                        "context_paths": [p for p, _ in ex.multifile_context],
                        "context_contents": [c for _, c in ex.multifile_context],
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
            count += 1
    return count


def import_examples(path: str | Path) -> list[FimExample]:
    """Read back an exported example file (inverse of export_examples)."""
    out: list[FimExample] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            FimExample(
                prefix=obj["prefix"],
                middle=obj["middle"],
                suffix=obj["suffix"],
                language=LanguageTag(obj["language"]),
                source_path=obj["source_path"],
                multifile_context=tuple(zip(obj["context_paths"], obj["context_contents"])),
            )
        )
    return out
