"""Closed word-level vocabulary and sequence encoding for the mini models.

Ids 0..3 are reserved for PAD/BOS/EOS/UNK; corpus words get ids from 4 up in
first-appearance order, so the id assignment is a pure function of the corpus
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .grammar import Sentence

__all__ = [
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
    "SPECIAL_TOKENS",
    "Vocabulary",
    "EncodedSequence",
    "build_vocabulary",
    "encode",
    "decode",
    "save_vocabulary",
    "load_vocabulary",
]

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")


class Vocabulary:
    """Bidirectional word/id map; immutable after build.

    ``unk_events`` counts UNK substitutions made by encode() as a diagnostic;
    it is excluded from equality and persistence.
    """

    def __init__(self, words: Iterable[str]):
        self.id_to_word: list[str] = list(SPECIAL_TOKENS)
        self.word_to_id: dict[str, int] = {}
        for w in words:
            if w in self.word_to_id or w in SPECIAL_TOKENS:
                continue
            self.word_to_id[w] = len(self.id_to_word)
            self.id_to_word.append(w)
        self.unk_events = 0

    def __len__(self) -> int:
        return len(self.id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_word == other.id_to_word

    def id_for(self, word: str) -> int:
        return self.word_to_id.get(word, UNK_ID)

    def word_for(self, idx: int) -> str:
        if not 0 <= idx < len(self.id_to_word):
            raise ValueError(f"id {idx} out of range for vocabulary of {len(self)}")
        return self.id_to_word[idx]


@dataclass(frozen=True)
class EncodedSequence:
    """Token ids starting with BOS and ending with EOS."""

    ids: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.ids)


def build_vocabulary(sentences: Iterable[Sentence]) -> Vocabulary:
    """Vocabulary over every distinct corpus word, first-appearance order."""
    seen_any = False

    def words():
        nonlocal seen_any
        for s in sentences:
            seen_any = True
            yield from s.words

    vocab = Vocabulary(words())
    if not seen_any:
        raise ValueError("empty corpus")
    return vocab


def encode(vocab: Vocabulary, s: Sentence) -> EncodedSequence:
    ids = [BOS_ID]
    for w in s.words:
        idx = vocab.id_for(w)
        if idx == UNK_ID:
            vocab.unk_events += 1
        ids.append(idx)
    ids.append(EOS_ID)
    return EncodedSequence(tuple(ids))


def decode(vocab: Vocabulary, e: EncodedSequence) -> Sentence:
    words = []
    for idx in e.ids:
        word = vocab.word_for(idx)  # raises on out-of-range ids
        if idx >= len(SPECIAL_TOKENS):
            words.append(word)
    return Sentence(tuple(words))


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """One token per line; 4 special lines first, then words (line == id)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for token in vocab.id_to_word:
            fh.write(token)
            fh.write("\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if tuple(lines[:4]) != SPECIAL_TOKENS:
        raise ValueError(f"{path}: missing special-token header")
    return Vocabulary(lines[4:])
