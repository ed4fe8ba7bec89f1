"""Confusion matrices, per-class precision/recall/F1 and ROC curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 5


class LengthMismatch(ValueError):
    pass


class SingleClassInput(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray       # (K, K) int
    normalized: np.ndarray   # row-normalised; rows without support stay zero

    @property
    def no_support(self) -> list[bool]:
        return [bool(n == 0) for n in self.counts.sum(axis=1)]

    def to_json(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "normalized": self.normalized.tolist(),
            "no_support": self.no_support,
        }


def _check(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    return y_true, y_pred


def confusion(y_true, y_pred, n_classes: int = NUM_CLASSES) -> ConfusionMatrix:
    y_true, y_pred = _check(y_true, y_pred)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    support = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(counts, support, out=np.zeros(counts.shape), where=support > 0)
    return ConfusionMatrix(counts, normalized)


@dataclass
class ClassMetrics:
    cls: int
    tp: int
    fp: int
    fn: int
    tn: int
    recall: float
    precision: float
    f1: float

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def no_support(self) -> bool:
        return self.support == 0

    @classmethod
    def from_counts(cls, label: int, tp: int, fp: int, fn: int, tn: int = 0) -> ClassMetrics:
        """Zero denominators give 0 rather than NaN; check ``no_support`` for empty classes."""
        recall = tp / (tp + fn) if tp + fn else 0.0
        precision = tp / (tp + fp) if tp + fp else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(label, int(tp), int(fp), int(fn), int(tn), recall, precision, f1)

    def to_json(self) -> dict:
        return {
            "class": self.cls,
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "support": self.support,
            "recall": self.recall, "precision": self.precision, "f1": self.f1,
            "no_support": self.no_support,
        }


def prf1(y_true, y_pred, cls: int) -> ClassMetrics:
    y_true, y_pred = _check(y_true, y_pred)
    t = y_true == cls
    p = y_pred == cls
    return ClassMetrics.from_counts(
        cls, int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)), int(np.sum(~t & ~p))
    )


def class_metrics(y_true, y_pred, n_classes: int = NUM_CLASSES) -> list[ClassMetrics]:
    return [prf1(y_true, y_pred, c) for c in range(n_classes)]


def metrics_from_confusion(cm: ConfusionMatrix) -> list[ClassMetrics]:
    counts = cm.counts
    total = counts.sum()
    out = []
    for c in range(len(counts)):
        tp = counts[c, c]
        fn = counts[c].sum() - tp
        fp = counts[:, c].sum() - tp
        out.append(ClassMetrics.from_counts(c, tp, fp, fn, total - tp - fn - fp))
    return out


def micro_recall(y_true, y_pred, n_classes: int = NUM_CLASSES) -> float:
    ms = class_metrics(y_true, y_pred, n_classes)
    tp = sum(m.tp for m in ms)
    return tp / sum(m.tp + m.fn for m in ms)


@dataclass
class RocCurve:
    scope: str
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist(),
            "thresholds": [float(t) if np.isfinite(t) else str(t) for t in self.thresholds],
            "auc": self.auc,
        }


def trapezoid(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def roc_binary(scores, positive, scope: str = "binary") -> RocCurve:
    """Exact ROC over every distinct score (positive when score >= threshold),
    bracketed by +inf and -inf thresholds."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    positive = np.asarray(positive, dtype=bool).ravel()
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput(f"{scope}: ROC needs both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = positive[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    last_of_run = np.r_[s[1:] != s[:-1], True]
    thresholds = np.r_[np.inf, s[last_of_run], -np.inf]
    tpr = np.r_[0.0, tp[last_of_run] / n_pos, 1.0]
    fpr = np.r_[0.0, fp[last_of_run] / n_neg, 1.0]
    return RocCurve(scope, fpr, tpr, thresholds, trapezoid(fpr, tpr))


def roc_auc(scores, y_true, scope: str = "per-class", n_classes: int = NUM_CLASSES):
    """One-vs-rest ROC analysis of (n, K) class scores.

    ``scope`` is ``"per-class"`` (list of K curves), ``"micro"`` (every
    (sample, class) pair pooled as one binary problem) or ``"macro"`` (mean of
    the per-class AUCs, with the per-class curves averaged on the union of their
    FPR grids).
    """
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if len(scores) != len(y_true):
        raise LengthMismatch(f"{len(scores)} score rows vs {len(y_true)} labels")
    onehot = y_true[:, None] == np.arange(n_classes)[None, :]
    if scope == "per-class":
        return [roc_binary(scores[:, c], onehot[:, c], scope=f"class_{c}") for c in range(n_classes)]
    if scope == "micro":
        return roc_binary(scores.ravel(), onehot.ravel(), scope="micro")
    if scope == "macro":
        curves = roc_auc(scores, y_true, "per-class", n_classes)
        grid = np.unique(np.concatenate([c.fpr for c in curves]))
        tpr = np.mean([np.interp(grid, c.fpr, c.tpr) for c in curves], axis=0)
        return RocCurve("macro", grid, tpr, np.full(len(grid), np.nan),
                        float(np.mean([c.auc for c in curves])))
    raise ValueError(f"unknown ROC scope {scope!r}")


def roc_set(scores, y_true, n_classes: int = NUM_CLASSES) -> dict[str, RocCurve | None]:
    """Per-class, micro and macro curves; classes without both outcomes map to None."""
    out: dict[str, RocCurve | None] = {}
    onehot = np.asarray(y_true)[:, None] == np.arange(n_classes)[None, :]
    scores = np.asarray(scores, dtype=np.float64)
    for c in range(n_classes):
        try:
            out[f"class_{c}"] = roc_binary(scores[:, c], onehot[:, c], scope=f"class_{c}")
        except SingleClassInput:
            out[f"class_{c}"] = None
    out["micro"] = roc_auc(scores, y_true, "micro", n_classes)
    try:
        out["macro"] = roc_auc(scores, y_true, "macro", n_classes)
    except SingleClassInput:
        out["macro"] = None
    return out
