"""Shallow random forest over sparse features (Gini splits, bootstrap rows)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import EmptyClass
from ..features import Vectorizer
from .linear import TrainConfig


@dataclass
class Tree:
    """Flat node arrays; ``feature[i] == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_classes) class distribution

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index per row of a dense matrix whose columns are original feature ids."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return node
            rows = np.nonzero(inner)[0]
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])


@dataclass
class ForestModel:
    classes: list[int]
    trees: list[Tree]
    n_trees: int
    max_depth: int
    seed: int
    dimension: int
    feature_mode: str = "tfidf"
    vectorizer: Vectorizer | None = None
    kind: str = field(default="forest", init=False)

    def decision_function(self, X) -> np.ndarray:
        """Mean leaf class distribution over all trees."""
        X = sp.csr_matrix(X)
        used = sorted({int(f) for t in self.trees for f in t.feature if f >= 0})
        remap = np.full(self.dimension, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        out = np.zeros((X.shape[0], len(self.classes)))
        for start in range(0, X.shape[0], 4096):
            dense = X[start : start + 4096][:, used].toarray() if used else np.zeros((min(4096, X.shape[0] - start), 0))
            for t in self.trees:
                local = Tree(np.where(t.feature >= 0, remap[np.maximum(t.feature, 0)], -1),
                             t.threshold, t.left, t.right, t.value)
                out[start : start + dense.shape[0]] += t.value[local.apply(dense)]
        return out / len(self.trees)


def _gini_cost(left: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity of each candidate split; ``left`` is (k, C) cumulative counts."""
    right = total[np.newaxis, :] - left
    nl = left.sum(axis=1)
    nr = right.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = nl - np.where(nl > 0, (left**2).sum(axis=1) / nl, 0.0)
        gr = nr - np.where(nr > 0, (right**2).sum(axis=1) / nr, 0.0)
    return gl + gr


def _best_threshold(col_rows, col_vals, weights, onehot, node_total):
    """Best split on one sparse column restricted to the node.

    ``weights`` is the per-row bootstrap multiplicity inside this node (0
    elsewhere). Rows absent from the column hold an implicit zero.
    Returns ``(cost, threshold)`` or ``None`` when the column is constant.
    """
    w = weights[col_rows]
    keep = w > 0
    rows, vals, w = col_rows[keep], col_vals[keep], w[keep]
    nz_counts = onehot[rows] * w[:, np.newaxis]
    zero_block = node_total - nz_counts.sum(axis=0)
    has_zero = zero_block.sum() > 1e-12
    if has_zero:
        vals = np.concatenate([[0.0], vals])
        nz_counts = np.vstack([zero_block[np.newaxis, :], nz_counts])
    if len(vals) < 2:
        return None
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    cum = np.cumsum(nz_counts[order], axis=0)
    cut = np.nonzero(vals[:-1] < vals[1:])[0]
    if len(cut) == 0:
        return None
    cost = _gini_cost(cum[cut], node_total)
    j = int(np.argmin(cost))
    i = cut[j]
    return float(cost[j]), 0.5 * (vals[i] + vals[i + 1])


def _grow_tree(Xc: sp.csc_matrix, Xr: sp.csr_matrix, onehot, boot, max_depth, max_features, rng) -> Tree:
    n, V = Xc.shape
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(weights):
        counts = weights @ onehot
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1, counts

    def build(rows, depth):
        weights = np.zeros(n)
        weights[rows] = boot[rows]
        node, total = new_node(weights)
        parent_cost = total.sum() - (total**2).sum() / total.sum()
        if depth >= max_depth or parent_cost <= 1e-12:
            return node
        present = np.unique(Xr[rows].indices)
        candidates = rng.permutation(V)
        is_present = np.zeros(V, dtype=bool)
        is_present[present] = True
        best = None
        visited = 0
        for f in candidates[is_present[candidates]]:
            lo, hi = Xc.indptr[f], Xc.indptr[f + 1]
            found = _best_threshold(Xc.indices[lo:hi], Xc.data[lo:hi], weights, onehot, total)
            if found is None:
                continue
            visited += 1
            if best is None or found[0] < best[0] - 1e-12:
                best = (found[0], int(f), found[1])
            if visited >= max_features:
                break
        if best is None or parent_cost - best[0] <= 1e-12:
            return node
        _, f, thr = best
        col = np.asarray(Xc[:, f].todense()).ravel()
        go_left = col[rows] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(np.nonzero(boot)[0], 0)
    return Tree(np.asarray(feature, dtype=np.int64), np.asarray(threshold), np.asarray(left, dtype=np.int64),
                np.asarray(right, dtype=np.int64), np.vstack(value))


def train_random_forest(X, labels, config: TrainConfig = TrainConfig(), classes=None, vectorizer=None,
                        feature_mode: str = "tfidf") -> ForestModel:
    """Bagged depth-limited Gini trees, ``sqrt(V)`` non-constant features tried per node.

    Tree ``i`` draws its bootstrap and feature order from
    ``SeedSequence([seed, i])``, so any tree can be rebuilt on its own.
    """
    X = sp.csr_matrix(X, dtype=float)
    X.sum_duplicates()
    labels = np.asarray(labels)
    if classes is None:
        classes = sorted(int(c) for c in np.unique(labels))
    classes = [int(c) for c in classes]
    for c in classes:
        if not np.any(labels == c):
            raise EmptyClass(f"class {c} has no training samples")
    n, V = X.shape
    onehot = (labels[:, np.newaxis] == np.asarray(classes)[np.newaxis, :]).astype(float)
    max_features = max(1, int(math.sqrt(V)))
    Xc = X.tocsc()
    trees = []
    for i in range(config.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, i]))
        boot = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
        trees.append(_grow_tree(Xc, X, onehot, boot, config.max_depth, max_features, rng))
    return ForestModel(classes, trees, config.n_trees, config.max_depth, config.seed, V, feature_mode, vectorizer)
