"""Class-wise greedy non-maximum suppression."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from sparsedet.evaluation.metrics import box_iou
from sparsedet.models.evaluation import Detection


def nms_order(boxes: np.ndarray, scores: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, then class id, then box coordinates."""
    return np.lexsort((boxes[:, 3], boxes[:, 2], boxes[:, 1], boxes[:, 0], classes, -scores))


def nms_indices(boxes: np.ndarray, scores: np.ndarray, classes: np.ndarray, iou_threshold: float) -> np.ndarray:
    """Indices kept by greedy suppression, in the deterministic order of :func:`nms_order`.

    A box is suppressed when its IoU with an already kept box of the same
    class is strictly greater than ``iou_threshold``.
    """
    if len(scores) == 0:
        return np.zeros(0, dtype=np.int64)
    order = nms_order(boxes, scores, classes)
    suppressed = np.zeros(len(scores), dtype=bool)
    keep = []
    for pos, idx in enumerate(order):
        if suppressed[idx]:
            continue
        keep.append(idx)
        rest = order[pos + 1 :]
        rest = rest[(classes[rest] == classes[idx]) & ~suppressed[rest]]
        if rest.size:
            ious = box_iou(boxes[idx : idx + 1], boxes[rest])[0]
            suppressed[rest[ious > iou_threshold]] = True
    return np.asarray(keep, dtype=np.int64)


def nms(detections: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Suppress overlapping same-class detections within each image.

    The result is sorted by :attr:`Detection.sort_key`; applying ``nms`` to
    its own output returns it unchanged.
    """
    if not 0.0 < iou_threshold < 1.0:
        msg = f"iou_threshold must lie in (0, 1), got {iou_threshold}"
        raise ValueError(msg)
    kept: list[Detection] = []
    by_image: dict[int, list[Detection]] = {}
    for det in detections:
        by_image.setdefault(det.image_id, []).append(det)
    for image_id in sorted(by_image):
        dets = by_image[image_id]
        boxes = np.array([d.box for d in dets], dtype=np.float64).reshape(-1, 4)
        scores = np.array([d.confidence for d in dets], dtype=np.float64)
        classes = np.array([d.class_id for d in dets], dtype=np.int64)
        kept.extend(dets[i] for i in nms_indices(boxes, scores, classes, iou_threshold))
    return sorted(kept, key=lambda d: (d.image_id, *d.sort_key))
