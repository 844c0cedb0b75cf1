"""Center-in-box target assignment.

A cell is positive when its center lies strictly inside a visible box.  When
several boxes contain the center, the smallest box wins; equal areas are
ordered by ``(x1, y1, x2, y2, class)``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch

from sparsedet.detector.network import GridGeometry


@dataclass
class TargetAssignment:
    """Per-cell training targets for a batch.

    - ``fg_mask``: ``(batch, G, G)`` bool
    - ``target_class``: ``(batch, G, G)`` long, ``-1`` on negatives
    - ``target_box``: ``(batch, G, G, 4)`` side distances in stride units, clamped to ``[0, B-1]``
    - ``target_xyxy``: ``(batch, G, G, 4)`` normalized corners of the owning box
    - ``gt_area_mask``: ``(batch, G, G, N_c)`` bool, cell center inside a visible box of that class
    """

    fg_mask: torch.Tensor
    target_class: torch.Tensor
    target_box: torch.Tensor
    target_xyxy: torch.Tensor
    gt_area_mask: torch.Tensor
    clamped_sides: int = 0

    @property
    def num_positive(self) -> int:
        return int(self.fg_mask.sum())

    def class_targets(self, num_classes: int) -> torch.Tensor:
        """One-hot float targets at positive cells, zeros elsewhere."""
        onehot = torch.zeros((*self.fg_mask.shape, num_classes), dtype=torch.float32)
        cls = self.target_class.clamp(min=0).unsqueeze(-1)
        onehot.scatter_(-1, cls, 1.0)
        return onehot * self.fg_mask.unsqueeze(-1)

    def to(self, device: torch.device | str) -> TargetAssignment:
        return TargetAssignment(
            fg_mask=self.fg_mask.to(device),
            target_class=self.target_class.to(device),
            target_box=self.target_box.to(device),
            target_xyxy=self.target_xyxy.to(device),
            gt_area_mask=self.gt_area_mask.to(device),
            clamped_sides=self.clamped_sides,
        )


def cxcywh_to_xyxy(boxes: np.ndarray) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    half_w, half_h = boxes[:, 2] / 2, boxes[:, 3] / 2
    return np.stack(
        [boxes[:, 0] - half_w, boxes[:, 1] - half_h, boxes[:, 0] + half_w, boxes[:, 1] + half_h],
        axis=1,
    )


def assign_targets(
    visible_gt: Sequence[tuple[np.ndarray, np.ndarray]],
    geometry: GridGeometry,
    num_classes: int,
) -> TargetAssignment:
    """Assign targets for a batch of ``(classes, cxcywh boxes)`` pairs."""
    g = geometry.grid
    batch = len(visible_gt)
    fg = np.zeros((batch, g, g), dtype=bool)
    target_class = np.full((batch, g, g), -1, dtype=np.int64)
    target_box = np.zeros((batch, g, g, 4), dtype=np.float64)
    target_xyxy = np.zeros((batch, g, g, 4), dtype=np.float64)
    gt_area = np.zeros((batch, g, g, num_classes), dtype=bool)
    clamped = 0

    centers = (np.arange(g, dtype=np.float64) + 0.5) / g
    cx = centers[None, None, :]
    cy = centers[None, :, None]

    for b, (classes, boxes) in enumerate(visible_gt):
        classes = np.asarray(classes, dtype=np.int64).reshape(-1)
        if classes.size == 0:
            continue
        xyxy = cxcywh_to_xyxy(boxes)
        area = (xyxy[:, 2] - xyxy[:, 0]) * (xyxy[:, 3] - xyxy[:, 1])
        order = np.lexsort((classes, xyxy[:, 3], xyxy[:, 2], xyxy[:, 1], xyxy[:, 0], area))
        xyxy, classes = xyxy[order], classes[order]

        # inside[k, row, col]
        inside = (
            (xyxy[:, 0, None, None] < cx)
            & (cx < xyxy[:, 2, None, None])
            & (xyxy[:, 1, None, None] < cy)
            & (cy < xyxy[:, 3, None, None])
        )
        for cls in np.unique(classes):
            gt_area[b, :, :, cls] = inside[classes == cls].any(axis=0)

        positive = inside.any(axis=0)
        owner = inside.argmax(axis=0)
        rows, cols = np.nonzero(positive)
        owners = owner[rows, cols]
        box = xyxy[owners]
        ccx, ccy = centers[cols], centers[rows]
        sides = np.stack([ccx - box[:, 0], ccy - box[:, 1], box[:, 2] - ccx, box[:, 3] - ccy], axis=1) * g
        clamped += int(((sides < 0) | (sides > geometry.bins - 1)).sum())

        fg[b, rows, cols] = True
        target_class[b, rows, cols] = classes[owners]
        target_box[b, rows, cols] = np.clip(sides, 0.0, geometry.bins - 1)
        target_xyxy[b, rows, cols] = box

    return TargetAssignment(
        fg_mask=torch.from_numpy(fg),
        target_class=torch.from_numpy(target_class),
        target_box=torch.from_numpy(target_box).float(),
        target_xyxy=torch.from_numpy(target_xyxy).float(),
        gt_area_mask=torch.from_numpy(gt_area),
        clamped_sides=clamped,
    )
