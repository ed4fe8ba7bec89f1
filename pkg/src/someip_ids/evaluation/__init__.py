"""Classification metrics and the cross-validation protocol."""
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    LengthMismatch,
    RocCurve,
    SingleClassInput,
    class_metrics,
    confusion,
    metrics_from_confusion,
    micro_recall,
    prf1,
    roc_auc,
    roc_binary,
    roc_set,
    trapezoid,
)
from .protocol import (
    ClassTooSmall,
    CvReport,
    EvalReport,
    FoldResult,
    cross_validate,
    evaluate,
    stratified_kfold,
    test_models,
)

__all__ = [
    "ClassMetrics",
    "ClassTooSmall",
    "ConfusionMatrix",
    "CvReport",
    "EvalReport",
    "FoldResult",
    "LengthMismatch",
    "RocCurve",
    "SingleClassInput",
    "class_metrics",
    "confusion",
    "cross_validate",
    "evaluate",
    "metrics_from_confusion",
    "micro_recall",
    "prf1",
    "roc_auc",
    "roc_binary",
    "roc_set",
    "stratified_kfold",
    "test_models",
    "trapezoid",
]
