"""Detection evaluation against oracle ground truth."""

from sparsedet.evaluation.metrics import (
    average_precision,
    background_rates,
    box_iou,
    confusion_matrix,
    recall_at_confidence,
)
from sparsedet.evaluation.nms import nms
from sparsedet.evaluation.report import (
    FingerprintMismatchError,
    build_report,
    evaluate,
    ground_truth,
    group_aggregate,
    predict,
)

__all__ = [
    "FingerprintMismatchError",
    "average_precision",
    "background_rates",
    "box_iou",
    "build_report",
    "confusion_matrix",
    "evaluate",
    "ground_truth",
    "group_aggregate",
    "nms",
    "predict",
    "recall_at_confidence",
]
