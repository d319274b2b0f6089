"""Sparse vectorization: raw counts, tf-idf and binary indicators."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .text import NgramConfig, Vocabulary, analyze, build_vocabulary


@dataclass(frozen=True)
class SparseVector:
    dimension: int
    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.dimension:
                raise ValueError("indices must be strictly increasing and < dimension")
            prev = i
        if any(v == 0 for v in self.values):
            raise ValueError("explicit zeros are not stored")

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.values))

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.asarray(self.values, dtype=float), np.asarray(self.indices, dtype=np.int64), [0, len(self.indices)]),
            shape=(1, self.dimension),
        )

    @classmethod
    def from_row(cls, row: sp.spmatrix) -> "SparseVector":
        row = sp.csr_matrix(row)
        row.eliminate_zeros()
        row.sort_indices()
        return cls(row.shape[1], tuple(int(i) for i in row.indices), tuple(float(v) for v in row.data))


@dataclass
class DocTermMatrix:
    """Rows of one shared dimension; ``matrix`` is CSR with sorted indices."""

    matrix: sp.csr_matrix
    vocabulary: Vocabulary

    def __post_init__(self):
        if self.matrix.shape[1] != len(self.vocabulary):
            raise ValueError("matrix width does not match vocabulary size")

    @property
    def shape(self):
        return self.matrix.shape

    def row(self, i: int) -> SparseVector:
        return SparseVector.from_row(self.matrix[i])

    @property
    def rows(self) -> list[SparseVector]:
        return [self.row(i) for i in range(self.matrix.shape[0])]


def count_vector(grams: Iterable[str], vocab: Vocabulary) -> SparseVector:
    counts = Counter(vocab.term_to_index[g] for g in grams if g in vocab.term_to_index)
    idx = sorted(counts)
    return SparseVector(len(vocab), tuple(idx), tuple(float(counts[i]) for i in idx))


def count_matrix(documents: Sequence[Sequence[str]], vocab: Vocabulary) -> DocTermMatrix:
    index = vocab.term_to_index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in documents:
        counts = Counter(index[g] for g in doc if g in index)
        for i in sorted(counts):
            indices.append(i)
            data.append(float(counts[i]))
        indptr.append(len(indices))
    m = sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(documents), len(vocab)),
    )
    return DocTermMatrix(m, vocab)


def idf_weights(vocab: Vocabulary) -> np.ndarray:
    """Smoothed idf, ``ln((1 + N) / (1 + df)) + 1``."""
    df = np.asarray(vocab.doc_frequency, dtype=float)
    return np.log((1.0 + vocab.n_docs) / (1.0 + df)) + 1.0


def _l2_normalize_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    m = m.tocsr(copy=True)
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    nz = norms > 0
    scale = np.ones_like(norms)
    scale[nz] = 1.0 / norms[nz]
    m.data *= np.repeat(scale, np.diff(m.indptr))
    return m


def tfidf_transform(counts: DocTermMatrix, idf: np.ndarray | None = None) -> DocTermMatrix:
    """Scale counts by idf and L2-normalize each row; empty rows stay empty.

    ``idf`` defaults to the table derived from the matrix's own vocabulary.
    """
    if idf is None:
        idf = idf_weights(counts.vocabulary)
    m = counts.matrix.tocsr(copy=True)
    m.data = m.data * idf[m.indices]
    return DocTermMatrix(_l2_normalize_rows(m), counts.vocabulary)


def binarize(x):
    """Set every stored nonzero to 1. Accepts a SparseVector, DocTermMatrix or scipy matrix."""
    if isinstance(x, SparseVector):
        return SparseVector(x.dimension, x.indices, tuple(1.0 for _ in x.indices))
    if isinstance(x, DocTermMatrix):
        return DocTermMatrix(binarize(x.matrix), x.vocabulary)
    m = sp.csr_matrix(x, copy=True)
    m.eliminate_zeros()
    m.data = np.ones_like(m.data)
    return m


FEATURE_MODES = ("counts", "tfidf", "binary", "nb_scaled")


@dataclass
class Vectorizer:
    """Text to feature rows under a fixed vocabulary.

    ``mode`` is one of counts, tfidf or binary; the NBSVM ratio scaling is
    applied by the model on top of binary rows.
    """

    vocabulary: Vocabulary
    ngram: NgramConfig
    stopwords: frozenset[str]
    mode: str = "tfidf"
    idf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("counts", "tfidf", "binary"):
            raise ValueError(f"unknown vectorizer mode {self.mode!r}")
        if self.mode == "tfidf" and self.idf is None:
            self.idf = idf_weights(self.vocabulary)

    @classmethod
    def fit(cls, texts: Sequence[str], ngram: NgramConfig, stopwords: frozenset[str], mode: str = "tfidf") -> "Vectorizer":
        docs = [analyze(t, stopwords, ngram) for t in texts]
        vocab = build_vocabulary(docs, ngram)
        return cls(vocab, ngram, stopwords, mode)

    def analyze(self, text: str) -> list[str]:
        return analyze(text, self.stopwords, self.ngram)

    def transform(self, texts: Sequence[str]) -> sp.csr_matrix:
        counts = count_matrix([self.analyze(t) for t in texts], self.vocabulary)
        if self.mode == "counts":
            return counts.matrix
        if self.mode == "binary":
            return binarize(counts.matrix)
        return tfidf_transform(counts, self.idf).matrix
