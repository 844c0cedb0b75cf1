"""Constrained false positive masking of the classification loss.

Every step, each whitelisted class gets a threshold ``T[c]``: the
``q``-quantile of its sigmoid scores inside its ground-truth area.  Outside
that area, entries scoring strictly above ``T[c]`` are likely unlabeled
instances and are removed from the classification loss (``M = 0``).
Classes without a ground-truth entry in the batch keep ``T[c] = inf``.
"""

from __future__ import annotations

from collections.abc import Collection
from dataclasses import dataclass

import torch

from sparsedet.models.training import CfplConfig


@dataclass
class CfplMask:
    """Binary loss mask shaped like the class scores plus per-class thresholds."""

    mask: torch.Tensor
    thresholds: torch.Tensor

    @property
    def masked_count(self) -> int:
        return int((self.mask == 0).sum())

    @classmethod
    def ones(cls, scores: torch.Tensor) -> CfplMask:
        return cls(
            mask=torch.ones_like(scores),
            thresholds=torch.full((scores.shape[-1],), float("inf"), dtype=torch.float64),
        )


@torch.no_grad()
def compute_cfpl_mask(
    scores: torch.Tensor,
    gt_area_mask: torch.Tensor,
    cfg: CfplConfig,
    catalog_whitelist: Collection[int] = (),
) -> CfplMask:
    """Build the mask for logits ``scores`` of shape ``(..., N_c)``.

    ``catalog_whitelist`` is used when ``cfg.whitelist`` is unset.  Thresholds
    are constants: no gradient flows through them or through the mask.
    """
    if gt_area_mask.shape != scores.shape:
        msg = f"gt_area_mask shape {tuple(gt_area_mask.shape)} does not match scores {tuple(scores.shape)}"
        raise ValueError(msg)

    result = CfplMask.ones(scores.detach())
    whitelist = cfg.resolve_whitelist(set(catalog_whitelist))
    num_classes = scores.shape[-1]
    if bad := sorted(c for c in whitelist if not 0 <= c < num_classes):
        msg = f"whitelist ids {bad} outside the catalog range [0, {num_classes})"
        raise ValueError(msg)

    probs = scores.detach().double().sigmoid()
    area = gt_area_mask.to(device=probs.device, dtype=torch.bool)
    for c in sorted(whitelist):
        in_area = area[..., c]
        if not in_area.any():
            continue
        threshold = torch.quantile(probs[..., c][in_area], cfg.threshold_quantile)
        result.thresholds[c] = threshold.item()
        drop = ~in_area & (probs[..., c] > threshold)
        result.mask[..., c][drop] = 0
    return result
