"""Corpus file helpers: one sentence per line, single spaces, UTF-8."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

from .grammar import Sentence

__all__ = ["write_corpus", "read_corpus", "iter_corpus"]


def write_corpus(path: str | Path, sentences: Iterable[Sentence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            fh.write(s.text)
            fh.write("\n")


def iter_corpus(path: str | Path) -> Iterator[Sentence]:
    """Stream sentences from a corpus file, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                yield Sentence(tuple(line.split(" ")))


def read_corpus(path: str | Path) -> list[Sentence]:
    return list(iter_corpus(path))
