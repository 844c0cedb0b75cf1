"""Loss kernels: classification BCE, CIoU box regression and the two-bin distribution loss.

All kernels take already-shaped tensors and reduce to a scalar.  They are
pure functions of their inputs.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from loguru import logger

EPS = 1e-9


class DegenerateBoxError(ValueError):
    """A target box has zero width or height."""

    def __init__(self, indices: list[int]) -> None:
        self.indices = indices
        shown = ", ".join(map(str, indices[:10]))
        more = f" (+{len(indices) - 10} more)" if len(indices) > 10 else ""
        super().__init__(f"degenerate target box (w or h = 0) at positive index {shown}{more}")


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def bce_loss(scores: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """Masked binary cross-entropy on logits.

    Elementwise terms are multiplied by ``mask`` (``None`` means all ones),
    summed, and divided by the number of positive cells (cells whose target
    vector along the last axis is non-zero), with a floor of 1.
    """
    targets = targets.to(scores.dtype)
    terms = F.binary_cross_entropy_with_logits(scores, targets, reduction="none")
    if mask is not None:
        terms = terms * mask.to(scores.dtype)
    positives = (targets.sum(-1) > 0).sum().clamp(min=1)
    return terms.sum() / positives


# ---------------------------------------------------------------------------
# Box regression
# ---------------------------------------------------------------------------


def ciou_terms(pred: torch.Tensor, target: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """Per-box ``1 - IoU + rho^2 / c^2 + alpha * v`` for ``(n, 4)`` corner boxes."""
    p_x1, p_y1, p_x2, p_y2 = pred.unbind(-1)
    t_x1, t_y1, t_x2, t_y2 = target.unbind(-1)
    w_p, h_p = p_x2 - p_x1, p_y2 - p_y1
    w_t, h_t = t_x2 - t_x1, t_y2 - t_y1

    inter = (p_x2.minimum(t_x2) - p_x1.maximum(t_x1)).clamp(min=0) * (
        p_y2.minimum(t_y2) - p_y1.maximum(t_y1)
    ).clamp(min=0)
    union = w_p * h_p + w_t * h_t - inter + eps
    iou = inter / union

    cw = p_x2.maximum(t_x2) - p_x1.minimum(t_x1)
    ch = p_y2.maximum(t_y2) - p_y1.minimum(t_y1)
    c2 = cw**2 + ch**2 + eps
    rho2 = ((t_x1 + t_x2 - p_x1 - p_x2) ** 2 + (t_y1 + t_y2 - p_y1 - p_y2) ** 2) / 4

    v = (4 / math.pi**2) * (torch.atan(w_t / h_t) - torch.atan(w_p / (h_p + eps))).pow(2)
    alpha = v / (1 - iou + v + eps)
    return 1 - iou + rho2 / c2 + alpha * v


def ciou_loss(pred_boxes: torch.Tensor, target_boxes: torch.Tensor, fg_mask: torch.Tensor) -> torch.Tensor:
    """Mean CIoU loss over positive cells; 0 when there are none."""
    pred = pred_boxes[fg_mask]
    target = target_boxes[fg_mask].to(pred.dtype)
    if pred.shape[0] == 0:
        return pred_boxes.sum() * 0.0

    degenerate = ((target[:, 2] - target[:, 0]) <= 0) | ((target[:, 3] - target[:, 1]) <= 0)
    if degenerate.any():
        raise DegenerateBoxError(torch.nonzero(degenerate).flatten().tolist())

    return ciou_terms(pred, target).mean()


# ---------------------------------------------------------------------------
# Side distributions
# ---------------------------------------------------------------------------


def clamp_side_targets(target: torch.Tensor, bins: int) -> tuple[torch.Tensor, int]:
    """Clamp side targets to ``[0, bins - 1]`` and count how many needed it."""
    outside = (target < 0) | (target > bins - 1)
    return target.clamp(0.0, bins - 1), int(outside.sum())


def dfl_terms(dists: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Two-bin cross-entropy per side for ``(..., B)`` logits and ``(...)`` targets in range."""
    bins = dists.shape[-1]
    left = target.floor().long().clamp(max=bins - 1)
    right = (left + 1).clamp(max=bins - 1)
    w_left = (left + 1).to(target.dtype) - target
    w_right = target - left.to(target.dtype)
    log_p = dists.log_softmax(-1)
    lp_left = log_p.gather(-1, left.unsqueeze(-1)).squeeze(-1)
    lp_right = log_p.gather(-1, right.unsqueeze(-1)).squeeze(-1)
    return -(w_left * lp_left + w_right * lp_right)


def dfl_loss(box_dists: torch.Tensor, target_sides: torch.Tensor, fg_mask: torch.Tensor) -> torch.Tensor:
    """Mean two-bin distribution loss over positive (cell, side) pairs.

    ``box_dists`` is ``(..., 4, B)`` and ``target_sides`` ``(..., 4)``.
    Out-of-range targets are clamped; the count is logged at DEBUG.
    """
    dists = box_dists[fg_mask]
    if dists.shape[0] == 0:
        return box_dists.sum() * 0.0
    target, clamped = clamp_side_targets(target_sides[fg_mask].to(dists.dtype), dists.shape[-1])
    if clamped:
        logger.debug("Clamped {} side targets into the bin range", clamped)
    return dfl_terms(dists, target).mean()
