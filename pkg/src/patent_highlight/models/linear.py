"""Linear text classifiers: multinomial naive Bayes, logistic regression,
linear SVM and NBSVM, all one-vs-rest over a shared feature space."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DidNotConverge, EmptyClass, NonPositiveAlpha
from ..features import Vectorizer, binarize

KINDS = ("mnb", "logreg", "svm", "nbsvm")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for every trainer. ``learning_rate`` is the initial SGD step;
    steps decay as ``learning_rate / sqrt(t)``. ``l2_lambda=None`` means
    ``1 / n_train`` for logistic regression (a unit soft-margin constant)."""

    epochs: int = 20
    learning_rate: float = 1.0
    l2_lambda: float | None = None
    svm_c: float = 1.0
    nbsvm_beta: float = 0.25
    nb_alpha: float = 1.0
    mnb_alpha: float = 1.0
    n_trees: int = 200
    max_depth: int = 3
    tol: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.nbsvm_beta <= 1.0:
            raise ValueError("nbsvm_beta must lie in [0, 1]")
        for name in ("l2_lambda", "svm_c", "learning_rate"):
            if (getattr(self, name) or 0.0) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.n_trees < 1 or self.max_depth < 0:
            raise ValueError("n_trees must be >= 1 and max_depth >= 0")


@dataclass
class NbRatio:
    r: np.ndarray
    alpha: float
    b: float


@dataclass
class LinearModel:
    """Per-class weight rows plus intercepts.

    For ``kind == "nbsvm"`` the class score is ``weights[c] . (ratios[c] * x)``
    with ``x`` the binary indicator row; otherwise ``weights[c] . x``.
    """

    classes: list[int]
    weights: np.ndarray
    intercepts: np.ndarray
    kind: str
    feature_mode: str
    vectorizer: Vectorizer | None = None
    ratios: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.intercepts = np.asarray(self.intercepts, dtype=float)
        if self.weights.shape[0] != len(self.classes) or self.intercepts.shape != (len(self.classes),):
            raise ValueError("need one weight row and one intercept per class")
        if self.vectorizer is not None and self.weights.shape[1] != len(self.vectorizer.vocabulary):
            raise ValueError("weight dimension does not match vocabulary")
        if self.ratios is not None:
            self.ratios = np.asarray(self.ratios, dtype=float)

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    @property
    def effective_weights(self) -> np.ndarray:
        """Weights acting directly on the (binary, tf-idf or count) input row."""
        if self.ratios is not None:
            return self.weights * self.ratios
        return self.weights

    def decision_function(self, X) -> np.ndarray:
        X = sp.csr_matrix(X)
        if self.kind == "nbsvm":
            X = binarize(X)
        return np.asarray(X @ self.effective_weights.T) + self.intercepts


def _class_index(labels, classes):
    labels = np.asarray(labels)
    if classes is None:
        classes = sorted(int(c) for c in np.unique(labels))
    classes = [int(c) for c in classes]
    for c in classes:
        if not np.any(labels == c):
            raise EmptyClass(f"class {c} has no training samples")
    return labels, classes


# --- multinomial naive Bayes ------------------------------------------------

def train_mnb(X, labels: Sequence[int], alpha: float = 1.0, classes=None, vectorizer=None,
              feature_mode: str = "counts") -> LinearModel:
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    X = sp.csr_matrix(X, dtype=float)
    labels, classes = _class_index(labels, classes)
    n, V = X.shape
    W = np.empty((len(classes), V))
    b = np.empty(len(classes))
    for k, c in enumerate(classes):
        mask = labels == c
        counts = np.asarray(X[mask].sum(axis=0)).ravel()
        W[k] = np.log(alpha + counts) - np.log(V * alpha + counts.sum())
        b[k] = math.log(mask.sum() / n)
    return LinearModel(classes, W, b, "mnb", feature_mode, vectorizer, meta={"alpha": alpha})


# --- binary losses shared by SGD and the full-batch objective ---------------

def _loss(kind: str, m: np.ndarray) -> np.ndarray:
    if kind == "log":
        return np.logaddexp(0.0, -m)
    return np.maximum(0.0, 1.0 - m)


def _dloss(kind: str, m):
    """Derivative of the loss with respect to the margin (a subgradient for hinge)."""
    if kind == "log":
        # -1 / (1 + e^m), evaluated stably
        return -np.exp(-np.logaddexp(0.0, m))
    return np.where(m < 1.0, -1.0, 0.0)


def binary_objective(w, b, X, y, lam, loss="log") -> float:
    """``lam/2 |w|^2 + mean(loss(y (Xw + b)))`` with ``y`` in {-1, +1}."""
    m = y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.mean(_loss(loss, m)))


def binary_gradient(w, b, X, y, lam, loss="log"):
    """Gradient (or hinge subgradient) of :func:`binary_objective` in ``(w, b)``."""
    m = y * (X @ w + b)
    g = _dloss(loss, m) * y / len(y)
    gw = lam * w + np.asarray(X.T @ g).ravel()
    return gw, float(g.sum())


def sgd_binary(X: sp.csr_matrix, y: np.ndarray, lam: float, loss: str, config: TrainConfig, seed):
    """Seeded SGD with ``eta_t = lr / sqrt(t)`` and a proximal L2 shrink.

    ``w`` is stored as ``scale * v`` so the shrink costs O(1) per step.
    Returns ``(w, b, final_objective, converged)``.
    """
    X = sp.csr_matrix(X, dtype=float)
    X.sum_duplicates()
    X.sort_indices()
    n, V = X.shape
    rng = np.random.default_rng(seed)
    indptr, indices, data = X.indptr, X.indices, X.data
    v = np.zeros(V)
    scale = 1.0
    b = 0.0
    t = 0
    prev = None
    obj = math.inf
    converged = False
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = config.learning_rate / math.sqrt(t)
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            xs = data[lo:hi]
            m = y[i] * (scale * float(v[idx] @ xs) + b)
            d = float(_dloss(loss, m))
            if d != 0.0:
                v[idx] -= (eta * d * y[i] / scale) * xs
                b -= eta * d * y[i]
            scale /= 1.0 + eta * lam
            if scale < 1e-9:
                v *= scale
                scale = 1.0
        w = scale * v
        obj = binary_objective(w, b, X, y, lam, loss)
        if prev is not None and abs(prev - obj) <= config.tol * max(abs(obj), 1e-12):
            converged = True
        else:
            converged = False
        prev = obj
    return scale * v, b, obj, converged


def _ovr(X, labels, classes, lam, loss, config, seeds):
    W = np.empty((len(classes), X.shape[1]))
    b = np.empty(len(classes))
    losses, flags = [], []
    for k, c in enumerate(classes):
        y = np.where(labels == c, 1.0, -1.0)
        W[k], b[k], obj, ok = sgd_binary(X, y, lam, loss, config, seeds[k])
        losses.append(obj)
        flags.append(ok)
    return W, b, losses, flags


def _warn_unconverged(kind, flags, losses):
    if not all(flags):
        warnings.warn(
            f"{kind}: SGD did not reach relative tolerance for classes "
            f"{[i for i, ok in enumerate(flags) if not ok]}; final objectives {losses}",
            DidNotConverge,
            stacklevel=3,
        )


def _class_seeds(seed, n):
    return [np.random.SeedSequence([seed, k]) for k in range(n)]


def train_logreg(X, labels, config: TrainConfig = TrainConfig(), classes=None, vectorizer=None,
                 feature_mode: str = "tfidf") -> LinearModel:
    X = sp.csr_matrix(X, dtype=float)
    labels, classes = _class_index(labels, classes)
    lam = config.l2_lambda if config.l2_lambda is not None else 1.0 / X.shape[0]
    W, b, losses, flags = _ovr(X, labels, classes, lam, "log", config,
                               _class_seeds(config.seed, len(classes)))
    _warn_unconverged("logreg", flags, losses)
    return LinearModel(classes, W, b, "logreg", feature_mode, vectorizer,
                       meta={"final_loss": losses, "converged": flags})


def svm_lambda(config: TrainConfig, n: int) -> float:
    """Per-sample L2 strength equivalent to the soft-margin constant ``C``."""
    return 1.0 / (config.svm_c * n) if config.svm_c > 0 else 0.0


def train_linear_svm(X, labels, config: TrainConfig = TrainConfig(), classes=None, vectorizer=None,
                     feature_mode: str = "tfidf") -> LinearModel:
    X = sp.csr_matrix(X, dtype=float)
    labels, classes = _class_index(labels, classes)
    lam = svm_lambda(config, X.shape[0])
    W, b, losses, flags = _ovr(X, labels, classes, lam, "hinge", config,
                               _class_seeds(config.seed, len(classes)))
    _warn_unconverged("svm", flags, losses)
    return LinearModel(classes, W, b, "svm", feature_mode, vectorizer,
                       meta={"final_loss": losses, "converged": flags})


# --- NBSVM --------------------------------------------------------------------

def log_count_ratio(X_binary, labels, c: int, alpha: float = 1.0) -> NbRatio:
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    X = sp.csr_matrix(X_binary, dtype=float)
    labels = np.asarray(labels)
    pos = labels == c
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise EmptyClass(f"class {c} needs samples on both sides of the one-vs-rest split")
    p = alpha + np.asarray(X[pos].sum(axis=0)).ravel()
    q = alpha + np.asarray(X[~pos].sum(axis=0)).ravel()
    r = np.log(p / p.sum()) - np.log(q / q.sum())
    return NbRatio(r, alpha, math.log(n_pos / n_neg))


def interpolate_weights(w: np.ndarray, beta: float) -> np.ndarray:
    """``(1 - beta) * mean|w| + beta * w``."""
    wbar = np.abs(w).sum() / len(w) if len(w) else 0.0
    return (1.0 - beta) * wbar + beta * w


def train_nbsvm(X_binary, labels, config: TrainConfig = TrainConfig(), classes=None, vectorizer=None) -> LinearModel:
    X = binarize(sp.csr_matrix(X_binary, dtype=float))
    labels, classes = _class_index(labels, classes)
    V = X.shape[1]
    lam = svm_lambda(config, X.shape[0])
    seeds = _class_seeds(config.seed, len(classes))
    R = np.empty((len(classes), V))
    W = np.empty((len(classes), V))
    b = np.empty(len(classes))
    raw = np.empty((len(classes), V))
    prior_ratio, losses, flags = [], [], []
    for k, c in enumerate(classes):
        ratio = log_count_ratio(X, labels, c, config.nb_alpha)
        R[k] = ratio.r
        prior_ratio.append(ratio.b)
        Xs = sp.csr_matrix(X.multiply(ratio.r[np.newaxis, :]))
        y = np.where(labels == c, 1.0, -1.0)
        raw[k], b[k], obj, ok = sgd_binary(Xs, y, lam, "hinge", config, seeds[k])
        W[k] = interpolate_weights(raw[k], config.nbsvm_beta)
        losses.append(obj)
        flags.append(ok)
    _warn_unconverged("nbsvm", flags, losses)
    return LinearModel(classes, W, b, "nbsvm", "nb_scaled", vectorizer, ratios=R,
                       meta={"beta": config.nbsvm_beta, "alpha": config.nb_alpha,
                             "prior_log_ratio": prior_ratio, "final_loss": losses, "converged": flags})
