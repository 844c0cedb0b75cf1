"""Composite detection loss and constrained false positive masking."""

from sparsedet.loss.cfpl import CfplMask, compute_cfpl_mask
from sparsedet.loss.kernels import (
    DegenerateBoxError,
    bce_loss,
    ciou_loss,
    ciou_terms,
    clamp_side_targets,
    dfl_loss,
    dfl_terms,
)
from sparsedet.loss.total import LossBreakdown, total_loss

__all__ = [
    "CfplMask",
    "DegenerateBoxError",
    "LossBreakdown",
    "bce_loss",
    "ciou_loss",
    "ciou_terms",
    "clamp_side_targets",
    "compute_cfpl_mask",
    "dfl_loss",
    "dfl_terms",
    "total_loss",
]
