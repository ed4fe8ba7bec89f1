"""Stratified k-fold cross-validation and held-out testing."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..netsim.config import CLASS_NAMES
from ..seqnet import History, RnnModel, TrainConfig, predict, train
from ..seqnet.checkpoint import EncoderHashMismatch
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    RocCurve,
    class_metrics,
    confusion,
    roc_set,
)

log = logging.getLogger(__name__)


class ClassTooSmall(ValueError):
    pass


def stratified_kfold(dataset, k: int = 3, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Class-proportional (train, validation) index splits.

    Each class is shuffled with a seeded generator and dealt round-robin to
    the folds; the dealing position carries over between classes so fold sizes
    differ by at most one.
    """
    labels = np.asarray(getattr(dataset, "labels", dataset), dtype=np.int64)
    if k < 2:
        raise ValueError("k must be at least 2")
    counts = Counter(labels.tolist())
    small = {c: n for c, n in counts.items() if n < k}
    if small:
        raise ClassTooSmall(f"classes with fewer than {k} samples: {dict(sorted(small.items()))}")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in sorted(counts):
        for i in rng.permutation(np.flatnonzero(labels == c)):
            folds[pos % k].append(int(i))
            pos += 1
    splits = []
    for f in range(k):
        val = np.sort(np.array(folds[f], dtype=np.int64))
        trn = np.sort(np.concatenate([folds[g] for g in range(k) if g != f]).astype(np.int64))
        splits.append((trn, val))
    return splits


@dataclass
class EvalReport:
    name: str
    n_samples: int
    accuracy: float
    classes: list[ClassMetrics]
    confusion: ConfusionMatrix
    roc: dict[str, RocCurve | None]
    encoder_hash: str | None = None
    extra: dict = field(default_factory=dict)

    def f1(self, cls: int) -> float:
        return self.classes[cls].f1

    def auc(self, key: str) -> float | None:
        curve = self.roc.get(key)
        return None if curve is None else curve.auc

    def to_json(self) -> dict:
        classes = []
        for m in self.classes:
            row = m.to_json()
            row["name"] = CLASS_NAMES[m.cls]
            row["auc"] = self.auc(f"class_{m.cls}")
            classes.append(row)
        return {
            "name": self.name,
            "encoder_hash": self.encoder_hash,
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            "classes": classes,
            "confusion": self.confusion.to_json(),
            "roc": {k: (None if v is None else v.to_json()) for k, v in self.roc.items()},
            **self.extra,
        }

    def write(self, out_dir: str | Path) -> None:
        """JSON report plus ROC and confusion CSVs for external plotting."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{self.name}.json").write_text(json.dumps(self.to_json(), indent=1))
        with open(out_dir / f"{self.name}_roc.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["curve", "fpr", "tpr", "threshold", "auc"])
            for key, curve in self.roc.items():
                if curve is None:
                    continue
                for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
                    w.writerow([key, repr(float(f)), repr(float(t)), th, repr(curve.auc)])
        with open(out_dir / f"{self.name}_confusion.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["true\\pred"] + list(CLASS_NAMES))
            for name, row in zip(CLASS_NAMES, self.confusion.normalized):
                w.writerow([name] + [repr(float(v)) for v in row])


def evaluate(model: RnnModel, dataset, name: str = "report") -> EvalReport:
    y_pred, probs = predict(model, dataset)
    y_true = dataset.labels
    return EvalReport(
        name=name,
        n_samples=len(dataset),
        accuracy=float(np.mean(y_pred == y_true)) if len(y_true) else 0.0,
        classes=class_metrics(y_true, y_pred),
        confusion=confusion(y_true, y_pred),
        roc=roc_set(probs, y_true),
        encoder_hash=model.encoder_hash,
    )


@dataclass
class FoldResult:
    fold: int
    train_size: int
    val_size: int
    history: History
    report: EvalReport


@dataclass
class CvReport:
    folds: list[FoldResult]
    config: dict

    def summary(self) -> dict:
        per_class = {}
        for c, name in enumerate(CLASS_NAMES):
            f1s = [f.report.f1(c) for f in self.folds]
            per_class[name] = {"f1_min": min(f1s), "f1_max": max(f1s), "f1_mean": float(np.mean(f1s))}
        return {"k": len(self.folds), "per_class": per_class}

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "folds": [
                {
                    "fold": f.fold,
                    "train_size": f.train_size,
                    "val_size": f.val_size,
                    "history": f.history.to_dict(),
                    "validation": f.report.to_json(),
                }
                for f in self.folds
            ],
            "summary": self.summary(),
        }


def cross_validate(dataset, cfg: TrainConfig, k: int = 3, class_weights=None,
                   split_seed: int | None = None) -> tuple[CvReport, list[RnnModel]]:
    """Train one model per fold (k-1 folds for fitting, one for validation/early stopping)."""
    splits = stratified_kfold(dataset, k, cfg.seed if split_seed is None else split_seed)
    folds, models = [], []
    for f, (trn, val) in enumerate(splits):
        fold_cfg = dataclasses.replace(cfg, seed=cfg.seed + f)
        train_set, val_set = dataset.subset(trn), dataset.subset(val)
        model, hist = train(None, train_set, val_set, fold_cfg,
                            class_weights if class_weights is not None else dataset.class_weights)
        report = evaluate(model, val_set, name=f"fold{f + 1}_validation")
        log.info("fold %d: best epoch %d, accuracy %.4f", f + 1, hist.best_epoch, report.accuracy)
        folds.append(FoldResult(f + 1, len(trn), len(val), hist, report))
        models.append(model)
    return CvReport(folds, {"k": k, **cfg.to_dict()}), models


def test_models(models, test_set, names=None) -> list[EvalReport]:
    digest = test_set.encoder.digest()
    reports = []
    for i, model in enumerate(models):
        if model.encoder_hash is not None and model.encoder_hash != digest:
            raise EncoderHashMismatch(f"model {i + 1} was trained with a different encoder")
        name = names[i] if names else f"model{i + 1}_test"
        reports.append(evaluate(model, test_set, name=name))
    return reports


test_models.__test__ = False  # not a pytest test despite the name
