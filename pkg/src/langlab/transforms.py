"""The three corpus transformations that define the experiment groups.

Identity leaves sentences untouched, Reverse flips the whole word order, and
ParityNegation inserts the reserved token NOT at the end of odd-length
sentences and at the start of even-length ones.  All transforms are purely
positional over word tokens; capitalization is a separate rendering step.
"""

from __future__ import annotations

import enum
from pathlib import Path
from typing import Iterable, Iterator

from .grammar import Sentence

__all__ = [
    "TransformKind",
    "TransformError",
    "NOT_TOKEN",
    "apply_transform",
    "invert_parity_negation",
    "transform_corpus",
    "transform_file",
    "normalize_line",
    "render_display",
]

NOT_TOKEN = "NOT"

_TERMINAL_PUNCTUATION = ".!?,;:"


class TransformKind(enum.Enum):
    IDENTITY = "identity"
    REVERSE = "reverse"
    PARITY_NEGATION = "parity-negation"


class TransformError(ValueError):
    pass


def apply_transform(kind: TransformKind, s: Sentence) -> Sentence:
    if not s.words:
        raise TransformError("empty input")
    if NOT_TOKEN in s.words:
        raise TransformError("reserved token present")
    if kind is TransformKind.IDENTITY:
        return s
    if kind is TransformKind.REVERSE:
        return Sentence(tuple(reversed(s.words)))
    if kind is TransformKind.PARITY_NEGATION:
        if len(s.words) % 2 == 1:
            return Sentence(s.words + (NOT_TOKEN,))
        return Sentence((NOT_TOKEN,) + s.words)
    raise TransformError(f"unknown transform kind: {kind!r}")


def invert_parity_negation(s: Sentence) -> Sentence:
    """Strip the single leading or trailing NOT; inverse of the parity transform."""
    count = s.words.count(NOT_TOKEN)
    if count != 1:
        raise TransformError("not a parity-negation sentence")
    if s.words[-1] == NOT_TOKEN:
        return Sentence(s.words[:-1])
    if s.words[0] == NOT_TOKEN:
        return Sentence(s.words[1:])
    raise TransformError("not a parity-negation sentence")


def transform_corpus(
    kind: TransformKind,
    sentences: Iterable[Sentence],
    chunk_size: int = 4096,
) -> Iterator[Sentence]:
    """Streaming per-line transform; memory bounded by chunk_size.

    The output is independent of chunk_size (the transform is per-sentence);
    per-line failures are reported with their 1-based line number.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    chunk: list[Sentence] = []
    line_no = 0
    done = 0
    it = iter(sentences)
    while True:
        chunk.clear()
        for s in it:
            chunk.append(s)
            if len(chunk) >= chunk_size:
                break
        if not chunk:
            return
        out: list[Sentence] = []
        for s in chunk:
            line_no = done + len(out) + 1
            try:
                out.append(apply_transform(kind, s))
            except TransformError as exc:
                raise TransformError(f"line {line_no}: {exc}") from exc
        done += len(out)
        yield from out


def normalize_line(line: str) -> str:
    """Ingest normalization for raw external text: lowercase, strip terminal
    punctuation from the end of the line, collapse whitespace."""
    line = line.strip().lower()
    while line and line[-1] in _TERMINAL_PUNCTUATION:
        line = line[:-1].rstrip()
    return " ".join(line.split())


def transform_file(
    kind: TransformKind,
    in_path: str | Path,
    out_path: str | Path,
    chunk_size: int = 4096,
    normalize: bool = False,
) -> int:
    """Transform a corpus file line by line; returns the line count written."""
    written = 0
    with open(in_path, "r", encoding="utf-8") as src, open(
        out_path, "w", encoding="utf-8", newline="\n"
    ) as dst:

        def lines() -> Iterator[Sentence]:
            for raw in src:
                text = raw.rstrip("\n")
                if normalize:
                    text = normalize_line(text)
                if text:
                    yield Sentence(tuple(text.split(" ")))

        for sentence in transform_corpus(kind, lines(), chunk_size):
            dst.write(sentence.text)
            dst.write("\n")
            written += 1
    return written


def render_display(s: Sentence) -> str:
    """Display form: capitalize the first non-NOT word, leave NOT as is."""
    words = list(s.words)
    for i, w in enumerate(words):
        if w != NOT_TOKEN:
            words[i] = w[:1].upper() + w[1:]
            break
    return " ".join(words)
