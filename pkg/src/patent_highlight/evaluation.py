"""Train/test splits, k-fold assignment, classification metrics and cross-validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadFraction, BadK, LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise BadFraction(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def train_test_split(n: int, spec: SplitSpec = SplitSpec(), labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split; both index arrays are returned sorted.

    The test set has ``round(n * test_fraction)`` members. In stratified
    mode the per-class test sizes come from largest-remainder apportionment,
    so each is within one of its exact share.
    """
    if n < 2:
        raise ValueError("need at least two samples to split")
    n_test = _round_half_up(n * spec.test_fraction)
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    if labels is None:
        raise ValueError("stratified split needs labels")
    labels = np.asarray(labels)
    if len(labels) != n:
        raise LengthMismatch("labels length differs from n")
    classes = sorted(set(labels.tolist()))
    exact = {c: float(np.sum(labels == c)) * spec.test_fraction for c in classes}
    quota = {c: int(math.floor(exact[c])) for c in classes}
    spare = n_test - sum(quota.values())
    for c in sorted(classes, key=lambda c: (-(exact[c] - quota[c]), c))[:max(spare, 0)]:
        quota[c] += 1
    test = []
    for c in classes:
        idx = np.nonzero(labels == c)[0]
        test.extend(rng.permutation(idx)[: quota[c]].tolist())
    test = np.sort(np.asarray(test, dtype=np.int64))
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.nonzero(mask)[0], test


def kfold(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``k`` shuffled folds whose sizes differ by at most one."""
    if k < 2 or n < k:
        raise BadK(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    labels: list[int]
    per_class: dict[int, ClassScores]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    confusion: np.ndarray  # gold rows x predicted columns
    fold_accuracies: list[float] | None = None
    fold_macro_f1: list[float] | None = field(default=None)

    def to_json(self) -> dict:
        out = {
            "labels": self.labels,
            "per_class": {str(c): s.__dict__ for c, s in self.per_class.items()},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
        }
        if self.fold_accuracies is not None:
            out["fold_accuracies"] = self.fold_accuracies
        if self.fold_macro_f1 is not None:
            out["fold_macro_f1"] = self.fold_macro_f1
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def render(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'label':>8}{'precision':>11}{'recall':>9}{'f1-score':>10}{'support':>9}")
        for c in self.labels:
            s = self.per_class[c]
            lines.append(f"{c:>8}{s.precision:>11.2f}{s.recall:>9.2f}{s.f1:>10.2f}{s.support:>9}")
        total = sum(s.support for s in self.per_class.values())
        lines.append(f"{'macro':>8}{self.macro_precision:>11.2f}{self.macro_recall:>9.2f}{self.macro_f1:>10.2f}{total:>9}")
        lines.append(f"{'accuracy':>8}{'':>11}{'':>9}{self.accuracy:>10.2f}{total:>9}")
        lines.append("")
        lines.append("confusion (rows = gold, columns = predicted)")
        lines.append("      " + "".join(f"{c:>8}" for c in self.labels))
        for c, row in zip(self.labels, self.confusion):
            lines.append(f"{c:>6}" + "".join(f"{int(v):>8}" for v in row))
        if self.fold_accuracies is not None:
            lines.append("")
            lines.append("fold accuracies: " + json.dumps([round(a, 6) for a in self.fold_accuracies]))
        return "\n".join(lines)


def _safe_div(a: float, b: float) -> float:
    return a / b if b else 0.0


def evaluate(gold: Sequence[int], pred: Sequence[int], labels: Sequence[int] = (0, 1, 2)) -> EvalReport:
    """Per-class and macro precision/recall/F1 plus the confusion matrix.

    Undefined ratios are 0; classes with zero support are left out of the
    macro averages.
    """
    gold = [int(g) for g in gold]
    pred = [int(p) for p in pred]
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold labels vs {len(pred)} predictions")
    labels = [int(c) for c in labels]
    pos = {c: i for i, c in enumerate(labels)}
    unknown = sorted({x for x in gold + pred if x not in pos})
    if unknown:
        raise UnknownLabel(f"labels {unknown} not in {labels}")
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        cm[pos[g], pos[p]] += 1

    per_class = {}
    for i, c in enumerate(labels):
        tp = int(cm[i, i])
        prec = _safe_div(tp, int(cm[:, i].sum()))
        rec = _safe_div(tp, int(cm[i, :].sum()))
        f1 = _safe_div(2 * prec * rec, prec + rec)
        per_class[c] = ClassScores(prec, rec, f1, int(cm[i, :].sum()))
    present = [c for c in labels if per_class[c].support > 0]

    def macro(attr):
        return float(np.mean([getattr(per_class[c], attr) for c in present])) if present else 0.0

    return EvalReport(labels, per_class, macro("precision"), macro("recall"), macro("f1"),
                      _safe_div(int(np.trace(cm)), len(gold)), cm)


# trainer(train_texts, train_labels) -> predictor(test_texts) -> predicted labels
Trainer = Callable[[Sequence[str], np.ndarray], Callable[[Sequence[str]], np.ndarray]]


def cross_validate(trainer: Trainer, texts: Sequence[str], labels, k: int = 5, seed: int = 0,
                   class_labels: Sequence[int] = (0, 1, 2)) -> EvalReport:
    """k-fold CV; the trainer only ever sees training-fold texts.

    Returned metrics are unweighted means of the per-fold values; the
    confusion matrix and supports are summed over folds.
    """
    labels = np.asarray(labels)
    n = len(texts)
    if len(labels) != n:
        raise LengthMismatch("texts and labels differ in length")
    folds = kfold(n, k, seed)
    reports = []
    for held in folds:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        train_idx = np.nonzero(mask)[0]
        assert not set(train_idx.tolist()) & set(held.tolist()), "held-out index leaked into training"
        predictor = trainer([texts[i] for i in train_idx], labels[train_idx])
        pred = predictor([texts[i] for i in held])
        reports.append(evaluate(labels[held], pred, class_labels))

    per_class = {}
    for c in class_labels:
        per_class[c] = ClassScores(
            float(np.mean([r.per_class[c].precision for r in reports])),
            float(np.mean([r.per_class[c].recall for r in reports])),
            float(np.mean([r.per_class[c].f1 for r in reports])),
            int(sum(r.per_class[c].support for r in reports)),
        )
    accs = [r.accuracy for r in reports]
    f1s = [r.macro_f1 for r in reports]
    return EvalReport(
        [int(c) for c in class_labels], per_class,
        float(np.mean([r.macro_precision for r in reports])),
        float(np.mean([r.macro_recall for r in reports])),
        float(np.mean(f1s)), float(np.mean(accs)),
        sum(r.confusion for r in reports), accs, f1s,
    )
