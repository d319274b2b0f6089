"""Classifiers, prediction and persistence."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatch
from ..features import SparseVector, Vectorizer
from ..text import NgramConfig
from .forest import ForestModel, Tree, train_random_forest
from .linear import (
    LinearModel,
    NbRatio,
    TrainConfig,
    binary_gradient,
    binary_objective,
    interpolate_weights,
    log_count_ratio,
    svm_lambda,
    train_linear_svm,
    train_logreg,
    train_mnb,
    train_nbsvm,
)
from .persist import CorruptFile, VersionMismatch, dumps_model, load_model, loads_model, save_model

MODEL_KINDS = ("mnb", "logreg", "svm", "nbsvm", "forest")

# feature space each kind is trained on when fitted from raw text
FEATURE_MODE = {"mnb": "tfidf", "logreg": "tfidf", "svm": "tfidf", "nbsvm": "binary", "forest": "tfidf"}


def _as_matrix(features, dimension: int) -> sp.csr_matrix:
    if isinstance(features, SparseVector):
        if features.dimension != dimension:
            raise DimensionMismatch(f"feature dimension {features.dimension} != model dimension {dimension}")
        return features.to_csr()
    X = sp.csr_matrix(features)
    if X.shape[1] != dimension:
        raise DimensionMismatch(f"feature dimension {X.shape[1]} != model dimension {dimension}")
    return X


def decision_scores(model, features) -> np.ndarray:
    """Per-class scores, shape ``(n_rows, n_classes)``."""
    return model.decision_function(_as_matrix(features, model.dimension))


def predict(model, features) -> tuple[int, np.ndarray]:
    """Label and per-class scores for one row; ties go to the lowest class index."""
    scores = decision_scores(model, features)
    if scores.shape[0] != 1:
        raise ValueError("predict expects exactly one row; use predict_batch")
    k = int(np.argmax(scores[0]))
    return model.classes[k], scores[0]


def predict_batch(model, features) -> np.ndarray:
    scores = decision_scores(model, features)
    return np.asarray(model.classes)[np.argmax(scores, axis=1)]


def text_scores(model, texts: Sequence[str]) -> np.ndarray:
    if model.vectorizer is None:
        raise ValueError("model has no embedded vectorizer")
    return decision_scores(model, model.vectorizer.transform(texts))


def predict_texts(model, texts: Sequence[str]) -> np.ndarray:
    scores = text_scores(model, texts)
    return np.asarray(model.classes)[np.argmax(scores, axis=1)]


def fit_text_model(kind: str, texts: Sequence[str], labels, config: TrainConfig = TrainConfig(),
                   ngram: NgramConfig = NgramConfig(), stopwords: frozenset[str] = frozenset(),
                   classes=None, vectorizer: Vectorizer | None = None):
    """Fit vocabulary (unless ``vectorizer`` is given) and a ``kind`` model on raw texts."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    mode = FEATURE_MODE[kind]
    if vectorizer is None:
        vectorizer = Vectorizer.fit(texts, ngram, stopwords, mode)
    elif vectorizer.mode != mode:
        vectorizer = Vectorizer(vectorizer.vocabulary, vectorizer.ngram, vectorizer.stopwords, mode)
    X = vectorizer.transform(texts)
    if kind == "mnb":
        return train_mnb(X, labels, config.mnb_alpha, classes, vectorizer, mode)
    if kind == "logreg":
        return train_logreg(X, labels, config, classes, vectorizer, mode)
    if kind == "svm":
        return train_linear_svm(X, labels, config, classes, vectorizer, mode)
    if kind == "nbsvm":
        return train_nbsvm(X, labels, config, classes, vectorizer)
    return train_random_forest(X, labels, config, classes, vectorizer, mode)


__all__ = [
    "CorruptFile", "ForestModel", "LinearModel", "MODEL_KINDS", "NbRatio", "TrainConfig", "Tree",
    "VersionMismatch", "binary_gradient", "binary_objective", "decision_scores", "dumps_model",
    "fit_text_model", "interpolate_weights", "load_model", "loads_model", "log_count_ratio", "predict",
    "predict_batch", "predict_texts", "save_model", "svm_lambda", "text_scores", "train_linear_svm",
    "train_logreg", "train_mnb", "train_nbsvm", "train_random_forest",
]
