"""Normalization, tokenization, stopwords, n-grams and vocabulary building."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyCorpus

_MARKUP = re.compile(r"<[^>]*>|&#?\w+;")
_NON_WORD = re.compile(r"[\W_]+")
_NUMBER = re.compile(r"(?<!\S)\d+(?!\S)")
_SPACES = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase and reduce ``text`` to space-separated word tokens.

    Markup tags and entities, punctuation, underscores and purely numeric
    tokens are dropped. The function is idempotent.
    """
    if not text:
        return ""
    text = _MARKUP.sub(" ", text)
    text = _NON_WORD.sub(" ", text.lower())
    text = _NUMBER.sub(" ", text)
    return _SPACES.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    return text.split()


def remove_stopwords(tokens: Sequence[str], stoplist: Iterable[str]) -> list[str]:
    stop = stoplist if isinstance(stoplist, (set, frozenset)) else set(stoplist)
    if not stop:
        return list(tokens)
    return [t for t in tokens if t not in stop]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a one-term-per-line stopword file; ``None`` loads the bundled English list.

    Entries are passed through :func:`normalize`, so ``"don't"`` contributes
    ``"don"`` and ``"t"``.
    """
    if path is None:
        raw = resources.files("patent_highlight").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in raw.splitlines():
        words.update(tokenize(normalize(line)))
    return frozenset(words)


@dataclass(frozen=True)
class NgramConfig:
    min_n: int = 1
    max_n: int = 2
    min_df: int = 1
    max_vocab: int | None = None

    def __post_init__(self):
        if not 1 <= self.min_n <= self.max_n <= 3:
            raise ValueError(f"need 1 <= min_n <= max_n <= 3, got {self.min_n}..{self.max_n}")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")
        if self.max_vocab is not None and self.max_vocab < 1:
            raise ValueError("max_vocab must be positive")


def ngrams(tokens: Sequence[str], config: NgramConfig = NgramConfig()) -> list[str]:
    out: list[str] = []
    for n in range(config.min_n, config.max_n + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i : i + n]))
    return out


def analyze(text: str, stoplist: Iterable[str], config: NgramConfig = NgramConfig()) -> list[str]:
    """Full chain: normalize, tokenize, drop stopwords, emit n-grams."""
    return ngrams(remove_stopwords(tokenize(normalize(text)), stoplist), config)


@dataclass
class Vocabulary:
    term_to_index: dict[str, int]
    doc_frequency: list[int]
    n_docs: int
    _terms: list[str] | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        """Terms ordered by index."""
        if self._terms is None or len(self._terms) != len(self.term_to_index):
            terms = [""] * len(self.term_to_index)
            for term, i in self.term_to_index.items():
                terms[i] = term
            self._terms = terms
        return self._terms

    def df(self, term: str) -> int:
        i = self.term_to_index.get(term)
        return 0 if i is None else self.doc_frequency[i]

    @classmethod
    def from_terms(cls, terms: Sequence[str], doc_frequency: Sequence[int], n_docs: int) -> "Vocabulary":
        return cls({t: i for i, t in enumerate(terms)}, list(doc_frequency), n_docs, list(terms))


def build_vocabulary(documents: Iterable[Sequence[str]], config: NgramConfig = NgramConfig()) -> Vocabulary:
    """Build a vocabulary from documents already turned into n-gram lists.

    Terms below ``min_df`` are dropped; when ``max_vocab`` is set the most
    frequent terms by document frequency are kept (ties: lexicographic).
    Indices follow sorted term order.
    """
    df: Counter[str] = Counter()
    n_docs = 0
    for doc in documents:
        n_docs += 1
        df.update(set(doc))
    if n_docs == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")

    kept = [(t, c) for t, c in df.items() if c >= config.min_df]
    if config.max_vocab is not None and len(kept) > config.max_vocab:
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[: config.max_vocab]
    kept.sort()
    return Vocabulary.from_terms([t for t, _ in kept], [c for _, c in kept], n_docs)
