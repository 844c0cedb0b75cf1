"""Detection metrics: matching, AP, recall and the confusion matrix.

All functions work on :class:`Detection` / :class:`GroundTruth` lists and
match only within the same ``image_id``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from sparsedet.models.enums import MatchingRule
from sparsedet.models.evaluation import Detection, GroundTruth, PRCurve


def box_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU matrix between ``(n, 4)`` and ``(m, 4)`` corner boxes."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    x1 = np.maximum(a[:, None, 0], b[None, :, 0])
    y1 = np.maximum(a[:, None, 1], b[None, :, 1])
    x2 = np.minimum(a[:, None, 2], b[None, :, 2])
    y2 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    safe = np.where(union > 0, union, 1.0)
    return np.where(union > 0, inter / safe, 0.0)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def match_class(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    class_id: int,
    iou_match: float = 0.5,
) -> tuple[list[Detection], list[bool], int]:
    """Greedy matching of one class in descending confidence.

    Each detection takes the unmatched same-class, same-image GT with the
    highest IoU; it is a true positive when that IoU is at least
    ``iou_match``.  Returns the sorted detections, their TP flags and the
    number of GT instances.
    """
    dets = sorted((d for d in detections if d.class_id == class_id), key=lambda d: d.sort_key)
    gts_by_image: dict[int, np.ndarray] = {}
    for image_id in {g.image_id for g in ground_truth if g.class_id == class_id}:
        gts_by_image[image_id] = np.array(
            [g.box for g in ground_truth if g.class_id == class_id and g.image_id == image_id],
            dtype=np.float64,
        )
    num_gt = sum(len(b) for b in gts_by_image.values())
    used = {image_id: np.zeros(len(b), dtype=bool) for image_id, b in gts_by_image.items()}

    flags = []
    for det in dets:
        boxes = gts_by_image.get(det.image_id)
        if boxes is None:
            flags.append(False)
            continue
        ious = box_iou(np.asarray(det.box), boxes)[0]
        ious[used[det.image_id]] = -1.0
        best = int(ious.argmax())
        if ious[best] >= iou_match:
            used[det.image_id][best] = True
            flags.append(True)
        else:
            flags.append(False)
    return dets, flags, num_gt


def precision_recall(flags: Sequence[bool], num_gt: int) -> tuple[list[float], list[float]]:
    """Precision and recall after each detection (cumulative)."""
    precision, recall = [], []
    tp = 0
    for k, is_tp in enumerate(flags, start=1):
        tp += int(is_tp)
        precision.append(tp / k)
        recall.append(tp / num_gt if num_gt else 0.0)
    return precision, recall


def envelope_area(precision: Sequence[float], recall: Sequence[float]) -> float:
    """All-points interpolated area: each recall step weighted by the best precision at or beyond it."""
    envelope = list(precision)
    for k in range(len(envelope) - 2, -1, -1):
        envelope[k] = max(envelope[k], envelope[k + 1])
    terms = []
    prev = 0.0
    for r, p in zip(recall, envelope, strict=True):
        if r > prev:
            terms.append((r - prev) * p)
            prev = r
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Per-class metrics
# ---------------------------------------------------------------------------


def average_precision(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    class_id: int,
    iou_match: float = 0.5,
) -> tuple[float | None, PRCurve]:
    """AP@``iou_match`` of one class and its PR samples.

    Returns ``None`` for the AP when the class has no ground truth.
    """
    dets, flags, num_gt = match_class(detections, ground_truth, class_id, iou_match)
    precision, recall = precision_recall(flags, num_gt)
    curve = PRCurve(precision=precision, recall=recall, confidence=[d.confidence for d in dets])
    if num_gt == 0:
        return None, curve
    return envelope_area(precision, recall), curve


def recall_at_confidence(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    class_id: int,
    conf_threshold: float = 0.5,
    iou_match: float = 0.5,
) -> float | None:
    """Share of GT instances matched by detections with confidence >= ``conf_threshold``."""
    confident = [d for d in detections if d.confidence >= conf_threshold]
    _, flags, num_gt = match_class(confident, ground_truth, class_id, iou_match)
    if num_gt == 0:
        return None
    return sum(flags) / num_gt


# ---------------------------------------------------------------------------
# Confusion matrix
# ---------------------------------------------------------------------------


def confusion_matrix(
    detections: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    num_classes: int,
    conf_threshold: float = 0.5,
    iou_match: float = 0.5,
    matching: MatchingRule = MatchingRule.IOU,
) -> np.ndarray:
    """``(N_c + 1)^2`` matrix, rows GT class, columns predicted class, background last.

    Matching is class-agnostic and one-to-one.  ``iou`` matching pairs GT and
    detections greedily by descending IoU; ``confidence`` matching lets
    detections pick their best unmatched GT in descending confidence.
    """
    bg = num_classes
    matrix = np.zeros((num_classes + 1, num_classes + 1), dtype=np.int64)
    confident = [d for d in detections if d.confidence >= conf_threshold]

    image_ids = sorted({g.image_id for g in ground_truth} | {d.image_id for d in confident})
    for image_id in image_ids:
        gts = [g for g in ground_truth if g.image_id == image_id]
        dets = sorted((d for d in confident if d.image_id == image_id), key=lambda d: d.sort_key)
        pairs = _match_pairs(gts, dets, iou_match, matching)
        matched_gt = {g for g, _ in pairs}
        matched_det = {d for _, d in pairs}
        for g, d in pairs:
            matrix[gts[g].class_id, dets[d].class_id] += 1
        for g, gt in enumerate(gts):
            if g not in matched_gt:
                matrix[gt.class_id, bg] += 1
        for d, det in enumerate(dets):
            if d not in matched_det:
                matrix[bg, det.class_id] += 1
    return matrix


def _match_pairs(
    gts: Sequence[GroundTruth],
    dets: Sequence[Detection],
    iou_match: float,
    matching: MatchingRule,
) -> list[tuple[int, int]]:
    if not gts or not dets:
        return []
    ious = box_iou(np.array([g.box for g in gts]), np.array([d.box for d in dets]))
    pairs: list[tuple[int, int]] = []
    used_gt: set[int] = set()
    used_det: set[int] = set()

    if matching == MatchingRule.IOU:
        candidates = [(g, d) for g, d in zip(*np.nonzero(ious >= iou_match), strict=True)]
        candidates.sort(key=lambda gd: (-ious[gd], gd[0], gd[1]))
        for g, d in candidates:
            if g in used_gt or d in used_det:
                continue
            used_gt.add(g)
            used_det.add(d)
            pairs.append((int(g), int(d)))
    else:
        for d in range(len(dets)):
            col = ious[:, d].copy()
            col[list(used_gt)] = -1.0
            g = int(col.argmax())
            if col[g] >= iou_match:
                used_gt.add(g)
                pairs.append((g, d))
    return pairs


def background_rates(matrix: np.ndarray) -> tuple[list[float | None], list[float | None]]:
    """Per-class share of GT left unmatched and share matched to another class."""
    bg = matrix.shape[0] - 1
    background, other = [], []
    for c in range(bg):
        total = int(matrix[c].sum())
        if total == 0:
            background.append(None)
            other.append(None)
            continue
        background.append(float(matrix[c, bg]) / total)
        other.append(float(total - matrix[c, c] - matrix[c, bg]) / total)
    return background, other
