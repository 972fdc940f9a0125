"""Context-free SVO grammar, seeded corpus generation, and a membership oracle.

The grammar is a plain (V, sigma, R, S) quadruple over lowercase English words.
Number agreement between the subject and the auxiliary is enforced during
generation, not encoded in the rules, so the rule set stays a pure CFG.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

__all__ = [
    "Grammar",
    "RewriteRule",
    "Sentence",
    "GenerationConfig",
    "default_grammar",
    "generate_sentence",
    "generate_corpus",
    "derives",
    "pluralize",
    "load_lexicon",
    "MODALS",
]

_DATA_DIR = Path(__file__).parent / "data"

# The one nonterminal whose rule may have an empty right-hand side
# (the silent singular number morpheme).
SG_MORPH = "SgMorph"

MODALS = ("will", "can", "may", "shall", "must")

# Auxiliary surface forms that must agree with the subject's number.
_AUX_NUMBER = {
    "is": "sing",
    "are": "pl",
    "was": "sing",
    "were": "pl",
    "has": "sing",
    "have": "pl",
}

_IRREGULAR_PLURALS = {
    "child": "children",
    "man": "men",
    "woman": "women",
    "person": "people",
    "mouse": "mice",
    "tooth": "teeth",
    "foot": "feet",
    "goose": "geese",
    "sheep": "sheep",
    "fish": "fish",
    "wolf": "wolves",
    "knife": "knives",
    "leaf": "leaves",
    "shelf": "shelves",
}

_SIBILANT_ENDINGS = ("s", "x", "z", "ch", "sh")
_VOWELS = "aeiou"


def pluralize(noun: str) -> str:
    """Plural surface form of a singular noun (irregular-aware)."""
    if noun in _IRREGULAR_PLURALS:
        return _IRREGULAR_PLURALS[noun]
    if noun.endswith("y") and len(noun) > 1 and noun[-2] not in _VOWELS:
        return noun[:-1] + "ies"
    if noun.endswith(_SIBILANT_ENDINGS):
        return noun + "es"
    return noun + "s"


@lru_cache(maxsize=None)
def load_lexicon() -> tuple[tuple[str, ...], tuple[tuple[str, str, str], ...]]:
    """Word lists from the bundled data file: (nouns, verb form triples)."""
    nouns: list[str] = []
    verbs: list[tuple[str, str, str]] = []
    section = None
    for raw in (_DATA_DIR / "lexicon.txt").read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if section == "nouns":
            nouns.append(line)
        elif section == "verbs":
            base, ing, en = line.split()
            verbs.append((base, ing, en))
    return tuple(nouns), tuple(verbs)


@dataclass(frozen=True)
class RewriteRule:
    lhs: str
    rhs: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs) if self.rhs else 'EMPTY'}"


@dataclass(frozen=True)
class Sentence:
    """An ordered sequence of lowercase word tokens, free of punctuation."""

    words: tuple[str, ...]
    meta: tuple[int, ...] | None = None  # derivation trace: rule indices, preorder

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(tuple(text.split()))

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class Grammar:
    """CFG quadruple: nonterminals, terminals, ordered rules, start symbol."""

    nonterminals: frozenset[str]
    terminals: frozenset[str]
    rules: tuple[RewriteRule, ...]
    start: str

    def validate(self) -> None:
        overlap = self.nonterminals & self.terminals
        if overlap:
            raise ValueError(f"nonterminals and terminals overlap: {sorted(overlap)}")
        if self.start not in self.nonterminals:
            raise ValueError(f"start symbol {self.start!r} is not a nonterminal")
        for rule in self.rules:
            if rule.lhs not in self.nonterminals:
                raise ValueError(f"rule lhs {rule.lhs!r} is not a nonterminal")
            if not rule.rhs and rule.lhs != SG_MORPH:
                raise ValueError(f"empty rhs only allowed for {SG_MORPH}: {rule}")
            for sym in rule.rhs:
                if sym not in self.nonterminals and sym not in self.terminals:
                    raise ValueError(f"unknown symbol {sym!r} in rule {rule}")

    def rules_for(self, symbol: str) -> tuple[int, ...]:
        return self._rule_index().get(symbol, ())

    def _rule_index(self) -> dict[str, tuple[int, ...]]:
        cached = getattr(self, "_index_cache", None)
        if cached is None:
            index: dict[str, list[int]] = {}
            for i, rule in enumerate(self.rules):
                index.setdefault(rule.lhs, []).append(i)
            cached = {k: tuple(v) for k, v in index.items()}
            object.__setattr__(self, "_index_cache", cached)
        return cached


@dataclass(frozen=True)
class GenerationConfig:
    """Corpus size, seed, and how much of each word list to use (None = all)."""

    count: int
    seed: int
    nouns: int | None = None
    verbs: int | None = None
    modals: int | None = None


def default_grammar() -> Grammar:
    """The realized SVO rule set over the bundled lexicon.

    Structure: Sentence -> NP VP; VP -> Verb NPobj; subject NPs carry the
    determiner, object NPs may also be bare plurals.  The abstract agreement
    and number morphemes are realized as auxiliary surface forms (is/are,
    was/were, has/have), optional modal chains (modal, modal have, modal have
    been), and the plural suffix on nouns.  Surface sentences span 5 to 8
    words.
    """
    nouns, verbs = load_lexicon()
    plurals = tuple(pluralize(n) for n in nouns)
    v_base = tuple(v[0] for v in verbs)
    v_ing = tuple(v[1] for v in verbs)
    v_en = tuple(v[2] for v in verbs)

    rules: list[RewriteRule] = [
        RewriteRule("Sentence", ("NP", "VP")),
        RewriteRule("NP", ("NP_sing",)),
        RewriteRule("NP", ("NP_pl",)),
        RewriteRule("NP_sing", ("T", "N", SG_MORPH)),
        RewriteRule(SG_MORPH, ()),
        RewriteRule("NP_pl", ("T", "N_pl")),
        RewriteRule("VP", ("Verb", "NPobj")),
        RewriteRule("NPobj", ("NP_sing",)),
        RewriteRule("NPobj", ("NP_pl",)),
        RewriteRule("NPobj", ("N_pl",)),
        # Aux + V patterns; the verb form is fixed by the auxiliary pattern.
        RewriteRule("Verb", ("AuxBePres", "V_ing")),
        RewriteRule("Verb", ("AuxBePres", "V_en")),
        RewriteRule("Verb", ("AuxBePast", "V_ing")),
        RewriteRule("Verb", ("AuxBePast", "V_en")),
        RewriteRule("Verb", ("AuxHave", "V_en")),
        RewriteRule("Verb", ("M", "V_base")),
        RewriteRule("Verb", ("M", "be", "V_ing")),
        RewriteRule("Verb", ("M", "have", "V_en")),
        RewriteRule("Verb", ("M", "have", "been", "V_ing")),
        RewriteRule("T", ("the",)),
        RewriteRule("AuxBePres", ("is",)),
        RewriteRule("AuxBePres", ("are",)),
        RewriteRule("AuxBePast", ("was",)),
        RewriteRule("AuxBePast", ("were",)),
        RewriteRule("AuxHave", ("has",)),
        RewriteRule("AuxHave", ("have",)),
    ]
    rules.extend(RewriteRule("M", (m,)) for m in MODALS)
    rules.extend(RewriteRule("N", (n,)) for n in nouns)
    rules.extend(RewriteRule("N_pl", (p,)) for p in plurals)
    rules.extend(RewriteRule("V_base", (v,)) for v in v_base)
    rules.extend(RewriteRule("V_ing", (v,)) for v in v_ing)
    rules.extend(RewriteRule("V_en", (v,)) for v in v_en)

    nonterminals = frozenset(r.lhs for r in rules)
    terminals = frozenset(
        sym for r in rules for sym in r.rhs if sym not in nonterminals
    )
    grammar = Grammar(nonterminals, terminals, tuple(rules), "Sentence")
    grammar.validate()
    return grammar


def _choice_limit(grammar: Grammar, config: GenerationConfig | None) -> dict[str, int]:
    """Per-category caps on how many lexical alternatives generation may use."""
    if config is None:
        return {}
    limits: dict[str, int] = {}
    for attr, symbols in (
        ("nouns", ("N", "N_pl")),
        ("verbs", ("V_base", "V_ing", "V_en")),
        ("modals", ("M",)),
    ):
        size = getattr(config, attr)
        if size is None:
            continue
        for sym in symbols:
            available = len(grammar.rules_for(sym))
            if not 0 < size <= available:
                raise ValueError(
                    f"{attr} size {size} must be in 1..{available} (available words)"
                )
            limits[sym] = size
    return limits


def _expand(
    grammar: Grammar,
    symbol: str,
    rng: random.Random,
    limits: dict[str, int],
    state: dict[str, str],
    words: list[str],
    trace: list[int],
) -> None:
    if symbol in grammar.terminals:
        words.append(symbol)
        return
    candidates = grammar.rules_for(symbol)
    if symbol in limits:
        candidates = candidates[: limits[symbol]]
    if symbol in ("AuxBePres", "AuxBePast", "AuxHave"):
        number = state["number"]
        candidates = tuple(
            i for i in candidates if _AUX_NUMBER[grammar.rules[i].rhs[0]] == number
        )
    index = candidates[rng.randrange(len(candidates))]
    trace.append(index)
    rule = grammar.rules[index]
    if symbol == "NP":  # only the subject expands NP; record its number
        state["number"] = "sing" if rule.rhs == ("NP_sing",) else "pl"
    for sym in rule.rhs:
        _expand(grammar, sym, rng, limits, state, words, trace)


def generate_sentence(
    grammar: Grammar,
    rng: random.Random,
    config: GenerationConfig | None = None,
) -> Sentence:
    """One random sentence with derivation trace, agreement enforced."""
    limits = _choice_limit(grammar, config)
    words: list[str] = []
    trace: list[int] = []
    _expand(grammar, grammar.start, rng, limits, {"number": ""}, words, trace)
    return Sentence(tuple(words), tuple(trace))


def generate_corpus(grammar: Grammar, config: GenerationConfig) -> list[Sentence]:
    """Exactly config.count sentences, a pure function of (grammar, config)."""
    if config.count < 0:
        raise ValueError(f"count must be non-negative, got {config.count}")
    _choice_limit(grammar, config)  # validate sizes up front
    rng = random.Random(config.seed)
    return [generate_sentence(grammar, rng, config) for _ in range(config.count)]


def derives(grammar: Grammar, sentence: Sentence) -> bool:
    """Exhaustive top-down membership test.

    Terminates because the grammar is non-recursive; memoized on
    (symbol, position) so repeated subproblems are parsed once.
    """
    words = sentence.words
    n = len(words)
    memo: dict[tuple[str, int], frozenset[int]] = {}

    def parse_symbol(symbol: str, i: int) -> frozenset[int]:
        if symbol in grammar.terminals:
            if i < n and words[i] == symbol:
                return frozenset((i + 1,))
            return frozenset()
        key = (symbol, i)
        if key in memo:
            return memo[key]
        ends: set[int] = set()
        for index in grammar.rules_for(symbol):
            ends.update(parse_seq(grammar.rules[index].rhs, i))
        result = frozenset(ends)
        memo[key] = result
        return result

    def parse_seq(rhs: tuple[str, ...], i: int) -> frozenset[int]:
        positions = {i}
        for sym in rhs:
            nxt: set[int] = set()
            for p in positions:
                nxt.update(parse_symbol(sym, p))
            if not nxt:
                return frozenset()
            positions = nxt
        return frozenset(positions)

    return n > 0 and n in parse_symbol(grammar.start, 0)
