"""Token attributions for single predictions.

Two routes: the exact decomposition of a linear model's class score, and a
perturbation-based local surrogate that treats the predictor as a black box.
"""

from __future__ import annotations

import html
import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateText, DimensionMismatch
from .models import LinearModel, decision_scores
from .text import normalize, tokenize

EXHAUSTIVE_MAX_TOKENS = 12


@dataclass
class Explanation:
    target_label: int
    token_weights: list[tuple[str, float]]
    k: int
    method: str
    score: float | None = None
    intercept: float | None = None

    def to_json(self) -> dict:
        return {"label": self.target_label, "method": self.method,
                "tokens": [{"token": t, "weight": w} for t, w in self.token_weights]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _ranked(pairs: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    # stable: equal magnitudes keep their incoming order
    return sorted(pairs, key=lambda tw: -abs(tw[1]))


def full_linear_attribution(model: LinearModel, text: str, target_label: int | None = None):
    """Every in-vocabulary term's contribution to one class score.

    Returns ``(label, [(term, contribution), ...] ranked, intercept, score)``;
    the contributions plus the intercept add up to the score.
    """
    if model.vectorizer is None:
        raise ValueError("model has no embedded vectorizer")
    x = model.vectorizer.transform([text])
    if x.shape[1] != model.dimension:
        raise DimensionMismatch(f"text vectorizes to {x.shape[1]} features, model expects {model.dimension}")
    scores = decision_scores(model, x)[0]
    if target_label is None:
        k = int(np.argmax(scores))
    else:
        k = model.classes.index(int(target_label))
    x = x.tocsr()
    x.sort_indices()
    values = x.data if model.kind != "nbsvm" else np.ones_like(x.data)
    contrib = model.effective_weights[k, x.indices] * values
    terms = model.vectorizer.vocabulary.terms
    pairs = [(terms[i], float(c)) for i, c in zip(x.indices, contrib)]
    return model.classes[k], _ranked(pairs), float(model.intercepts[k]), float(scores[k])


def linear_attribution(model: LinearModel, text: str, k: int = 10, target_label: int | None = None) -> Explanation:
    label, pairs, intercept, score = full_linear_attribution(model, text, target_label)
    return Explanation(label, pairs[: max(k, 0)], k, "linear", score, intercept)


def _cosine_distance_to_ones(masks: np.ndarray) -> np.ndarray:
    d = masks.shape[1]
    kept = masks.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = kept / (np.sqrt(kept) * np.sqrt(d))
    return np.where(kept > 0, 1.0 - sim, 1.0)


def weighted_ridge(Z: np.ndarray, y: np.ndarray, w: np.ndarray, alpha: float = 1.0) -> tuple[np.ndarray, float]:
    """Minimize ``sum w_i (y_i - b - z_i . c)**2 + alpha |c|**2``; returns ``(c, b)``."""
    zbar = (w @ Z) / w.sum()
    ybar = float(w @ y) / w.sum()
    Zc = Z - zbar
    A = Zc.T @ (Zc * w[:, np.newaxis])
    rhs = Zc.T @ ((y - ybar) * w)
    coef = np.linalg.solve(A + alpha * np.eye(Z.shape[1]), rhs)
    return coef, ybar - float(zbar @ coef)


def surrogate_explain(predictor: Callable[[Sequence[str]], np.ndarray], text: str, target_label: int,
                      n_samples: int = 1000, kernel_width: float = 25.0, k: int = 10, seed: int = 0,
                      ridge_alpha: float | None = None, classes: Sequence[int] = (0, 1, 2)) -> Explanation:
    """Local linear surrogate over distinct-token presence masks.

    ``predictor`` maps a list of texts to an ``(n, n_classes)`` score array.
    Masked variants keep each distinct token with probability 0.5 (the
    unmasked text is always included); with at most 12 distinct tokens all
    ``2**d`` masks are enumerated instead. Sample weights are
    ``exp(-D**2 / kernel_width**2)`` with ``D`` the cosine distance to the
    unmasked text, scaled by 100.

    ``ridge_alpha=None`` penalizes with 1.0 when sampling and not at all when
    enumerating: the exhaustive fit is fully determined, and any penalty
    shrinks the mean direction differently from the rest, which can flip
    the signs and ranks of an exactly linear predictor's weights.
    """
    tokens = tokenize(normalize(text))
    if not tokens:
        raise DegenerateText("text has no tokens to explain")
    if n_samples < 10:
        raise ValueError("n_samples must be >= 10")
    vocab = list(dict.fromkeys(tokens))
    d = len(vocab)
    pos = {t: i for i, t in enumerate(vocab)}
    exhaustive = d <= EXHAUSTIVE_MAX_TOKENS
    if ridge_alpha is None:
        ridge_alpha = 0.0 if exhaustive else 1.0
    if exhaustive:
        masks = np.array(list(itertools.product((1, 0), repeat=d)), dtype=float)
    else:
        rng = np.random.default_rng(seed)
        masks = (rng.random((n_samples, d)) < 0.5).astype(float)
        masks[0] = 1.0
    variants = [" ".join(t for t in tokens if m[pos[t]]) for m in masks]
    scores = np.asarray(predictor(variants), dtype=float)
    y = scores[:, list(classes).index(int(target_label))]
    dist = _cosine_distance_to_ones(masks) * 100.0
    weights = np.exp(-(dist**2) / kernel_width**2)
    coef, _ = weighted_ridge(masks, y, weights, ridge_alpha)
    pairs = _ranked([(t, float(c)) for t, c in zip(vocab, coef)])
    return Explanation(int(target_label), pairs[: max(k, 0)], k, "surrogate")


def model_predictor(model) -> Callable[[Sequence[str]], np.ndarray]:
    def run(texts):
        return decision_scores(model, model.vectorizer.transform(list(texts)))

    return run


# --- rendering ---------------------------------------------------------------------

def _signed_color(weight: float, scale: float) -> str:
    a = min(abs(weight) / scale, 1.0) if scale > 0 else 0.0
    rgb = "0,160,0" if weight > 0 else "200,0,0"
    return f"rgba({rgb},{a * 0.8:.3f})"


def explanation_html(text: str, exp: Explanation) -> str:
    """Self-contained page: the text with each word shaded by its unigram weight, then a legend."""
    weights = dict(exp.token_weights)
    scale = max((abs(w) for w in weights.values()), default=0.0)
    out = []
    for word in text.split():
        key = normalize(word)
        w = weights.get(key)
        if w is None:
            out.append(html.escape(word))
        else:
            out.append(f'<span style="background:{_signed_color(w, scale)}" title="{w:+.4f}">{html.escape(word)}</span>')
    legend = "".join(
        f'<li><code>{html.escape(t)}</code> {w:+.4f}</li>' for t, w in exp.token_weights)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"/><title>explanation</title></head>"
        "<body style=\"font-family:sans-serif\">"
        f"<h3>label {exp.target_label} ({html.escape(exp.method)} attribution, top {exp.k})</h3>"
        f"<p>{' '.join(out)}</p>"
        f"<ol>{legend}</ol></body></html>\n"
    )
