"""Composite detection loss and its per-step breakdown."""

from __future__ import annotations

import math
from collections.abc import Collection
from dataclasses import dataclass, field

import torch

from sparsedet.detector.assign import TargetAssignment
from sparsedet.detector.decode import decode_boxes
from sparsedet.detector.network import GridGeometry, PredictionGrid
from sparsedet.loss.cfpl import CfplMask, compute_cfpl_mask
from sparsedet.loss.kernels import bce_loss, ciou_loss, dfl_loss
from sparsedet.models.training import CfplConfig, LossWeights


@dataclass
class LossBreakdown:
    """Scalar components of one loss evaluation."""

    total: float
    bce: float
    ciou: float
    dfl: float
    masked_count: int = 0
    thresholds: list[float] = field(default_factory=list)
    dfl_clamped: int = 0

    @staticmethod
    def header(num_classes: int) -> list[str]:
        return ["step", "L_total", "L_bce", "L_ciou", "L_dfl", "masked_count", *(f"T_{c}" for c in range(num_classes))]

    def row(self, step: int) -> list[str]:
        return [
            str(step),
            _fmt(self.total),
            _fmt(self.bce),
            _fmt(self.ciou),
            _fmt(self.dfl),
            str(self.masked_count),
            *(_fmt(t) for t in self.thresholds),
        ]

    def log_line(self, step: int) -> str:
        """``step, L_total, L_bce, L_ciou, L_dfl, masked_count, T_0 .. T_{N_c-1}``."""
        return ",".join(self.row(step))


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6f}"


def total_loss(
    grid: PredictionGrid,
    assignment: TargetAssignment,
    weights: LossWeights,
    cfg: CfplConfig,
    geometry: GridGeometry,
    catalog_whitelist: Collection[int] = (),
) -> tuple[torch.Tensor, LossBreakdown]:
    """Weighted sum of CIoU, DFL and (masked) BCE.

    With ``cfg.enabled`` false the BCE term is computed without a mask at all,
    so the result matches the unmasked loss bit for bit.
    """
    scores = grid.class_scores
    device = scores.device
    assignment = assignment.to(device)
    num_classes = scores.shape[-1]
    targets = assignment.class_targets(num_classes).to(device=device, dtype=scores.dtype)

    if cfg.enabled:
        cfpl = compute_cfpl_mask(scores, assignment.gt_area_mask, cfg, catalog_whitelist)
    else:
        cfpl = CfplMask.ones(scores.detach())
    mask = cfpl.mask if cfpl.masked_count else None

    l_bce = bce_loss(scores, targets, mask)
    pred_boxes = decode_boxes(grid.box_dists, geometry, clamp=False)
    l_ciou = ciou_loss(pred_boxes, assignment.target_xyxy, assignment.fg_mask)
    l_dfl = dfl_loss(grid.box_dists, assignment.target_box, assignment.fg_mask)

    total = weights.lambda_ciou * l_ciou + weights.lambda_dfl * l_dfl + weights.lambda_bce * l_bce
    breakdown = LossBreakdown(
        total=float(total.detach()),
        bce=float(l_bce.detach()),
        ciou=float(l_ciou.detach()),
        dfl=float(l_dfl.detach()),
        masked_count=cfpl.masked_count,
        thresholds=[float(t) for t in cfpl.thresholds.tolist()],
        dfl_clamped=assignment.clamped_sides,
    )
    return total, breakdown
