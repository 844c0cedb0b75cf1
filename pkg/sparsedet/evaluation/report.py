"""Inference post-processing and EvalReport assembly.

Evaluation is always against the oracle ground truth (``.full`` labels),
never against the visible subset.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import torch
from loguru import logger

from sparsedet.detector.assign import cxcywh_to_xyxy
from sparsedet.detector.decode import decode_boxes
from sparsedet.detector.network import GridDetector
from sparsedet.evaluation.metrics import (
    average_precision,
    background_rates,
    confusion_matrix,
    recall_at_confidence,
)
from sparsedet.evaluation.nms import nms_indices, nms_order
from sparsedet.models.catalog import ClassCatalog
from sparsedet.models.enums import ClassGroup
from sparsedet.models.evaluation import (
    ClassMetrics,
    Detection,
    EvalConfig,
    EvalReport,
    GroundTruth,
    GroupMetrics,
    PRCurve,
)
from sparsedet.models.scene import SceneSample

RECALL_GRID = np.linspace(0.0, 1.0, 101)


class FingerprintMismatchError(ValueError):
    """Checkpoint and dataset were produced from different data."""

    def __init__(self, expected: str | None, actual: str | None) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"checkpoint was trained on dataset {str(expected)[:12]} but the evaluation data is {str(actual)[:12]}"
        )


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def images_to_tensor(samples: Sequence[SceneSample]) -> torch.Tensor:
    """Stack ``H x W x 3`` images into a ``batch x 3 x H x W`` float tensor."""
    return torch.from_numpy(np.stack([s.image for s in samples]).astype(np.float32)).permute(0, 3, 1, 2).contiguous()


@torch.no_grad()
def predict(
    model: GridDetector,
    samples: Sequence[SceneSample],
    config: EvalConfig,
    *,
    batch_size: int = 16,
    device: str | torch.device = "cpu",
) -> list[Detection]:
    """Per-image detections after score floor, candidate cap, NMS and ``max_det``."""
    was_training = model.training
    model.eval()
    detections: list[Detection] = []
    try:
        for start in range(0, len(samples), batch_size):
            batch = samples[start : start + batch_size]
            grid = model(images_to_tensor(batch).to(device))
            probs = grid.class_scores.sigmoid().double().cpu().numpy()
            boxes = decode_boxes(grid.box_dists, model.geometry).double().cpu().numpy()
            for sample, p, b in zip(batch, probs, boxes, strict=True):
                detections.extend(_postprocess(sample.index, p, b, config))
    finally:
        model.train(was_training)
    return detections


def _postprocess(image_id: int, probs: np.ndarray, boxes: np.ndarray, config: EvalConfig) -> list[Detection]:
    num_classes = probs.shape[-1]
    scores = probs.reshape(-1)
    cells = np.repeat(boxes.reshape(-1, 4), num_classes, axis=0)
    classes = np.tile(np.arange(num_classes), boxes.shape[0] * boxes.shape[1])

    keep = np.nonzero(scores >= config.score_floor)[0]
    scores, cells, classes = scores[keep], cells[keep], classes[keep]
    if len(scores) > config.max_candidates:
        top = nms_order(cells, scores, classes)[: config.max_candidates]
        scores, cells, classes = scores[top], cells[top], classes[top]

    kept = nms_indices(cells, scores, classes, config.nms_iou)[: config.max_det]
    return [
        Detection(
            image_id=image_id,
            box=(float(cells[i, 0]), float(cells[i, 1]), float(cells[i, 2]), float(cells[i, 3])),
            class_id=int(classes[i]),
            confidence=float(scores[i]),
        )
        for i in kept
    ]


def ground_truth(samples: Sequence[SceneSample]) -> list[GroundTruth]:
    """Oracle boxes of ``samples`` in normalized corner form."""
    out = []
    for sample in samples:
        for cls, box in zip(sample.gt_classes, cxcywh_to_xyxy(sample.gt_boxes), strict=True):
            out.append(
                GroundTruth(
                    image_id=sample.index,
                    box=(float(box[0]), float(box[1]), float(box[2]), float(box[3])),
                    class_id=int(cls),
                )
            )
    return out


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


def evaluate(
    model: GridDetector,
    samples: Sequence[SceneSample],
    catalog: ClassCatalog,
    config: EvalConfig,
    *,
    device: str | torch.device = "cpu",
    split: str | None = None,
) -> EvalReport:
    """Predict on ``samples`` and score against their oracle ground truth."""
    detections = predict(model, samples, config, device=device)
    report = build_report(detections, ground_truth(samples), catalog, config, num_images=len(samples))
    if split is not None:
        report.split = split
    logger.debug("Evaluated {} images: mAP@0.5 {:.4f}, recall {:.4f}", len(samples), report.map50, report.mean_recall)
    return report


def build_report(
    detections: Sequence[Detection],
    gts: Sequence[GroundTruth],
    catalog: ClassCatalog,
    config: EvalConfig,
    *,
    num_images: int = 0,
) -> EvalReport:
    num_classes = len(catalog)
    matrix = confusion_matrix(
        detections,
        gts,
        num_classes,
        conf_threshold=config.conf_threshold,
        iou_match=config.iou_match,
        matching=config.matching,
    )
    background, other = background_rates(matrix)

    classes = []
    for spec in catalog.classes:
        ap, curve = average_precision(detections, gts, spec.id, config.iou_match)
        recall = recall_at_confidence(detections, gts, spec.id, config.conf_threshold, config.iou_match)
        classes.append(
            ClassMetrics(
                class_id=spec.id,
                name=spec.name,
                group=spec.group,
                num_gt=sum(1 for g in gts if g.class_id == spec.id),
                ap=ap,
                recall=recall,
                background_rate=background[spec.id],
                other_class_rate=other[spec.id],
                pr_curve=curve,
            )
        )

    report = EvalReport(
        split=config.split.value,
        num_images=num_images,
        conf_threshold=config.conf_threshold,
        iou_match=config.iou_match,
        classes=classes,
        confusion=matrix.tolist(),
    )
    report.groups = group_aggregate(report, catalog)
    return report


def interpolated_precision(curve: PRCurve, grid: np.ndarray = RECALL_GRID) -> np.ndarray:
    """Best precision at recall >= each grid point (0 beyond the last recall reached)."""
    if not curve.recall:
        return np.zeros_like(grid)
    recall = np.asarray(curve.recall)
    envelope = np.maximum.accumulate(np.asarray(curve.precision)[::-1])[::-1]
    idx = np.searchsorted(recall, grid, side="left")
    out = np.zeros_like(grid)
    valid = idx < len(recall)
    out[valid] = envelope[idx[valid]]
    return out


def group_aggregate(report: EvalReport, catalog: ClassCatalog) -> dict[str, GroupMetrics]:
    """Unweighted means of AP, recall and background rate per class group.

    Classes without ground truth are excluded; a group with no remaining
    class is absent from the result.
    """
    groups: dict[str, GroupMetrics] = {}
    for group in ClassGroup:
        members = [
            m for m in report.classes if catalog[m.class_id].group == group and m.ap is not None and m.num_gt > 0
        ]
        if not members:
            continue
        pr = np.mean([interpolated_precision(m.pr_curve) for m in members], axis=0)
        groups[group.value] = GroupMetrics(
            group=group,
            class_ids=[m.class_id for m in members],
            ap=float(np.mean([m.ap for m in members])),
            recall=float(np.mean([m.recall or 0.0 for m in members])),
            background_rate=float(np.mean([m.background_rate or 0.0 for m in members])),
            pr_recall=RECALL_GRID.tolist(),
            pr_precision=pr.tolist(),
        )
    return groups
