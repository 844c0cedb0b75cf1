"""Box decoding from per-side bin distributions."""

from __future__ import annotations

import math

import torch

from sparsedet.detector.network import GridGeometry


def side_distances(box_dists: torch.Tensor) -> torch.Tensor:
    """Softmax expectation over the last (bin) axis, in stride units."""
    bins = box_dists.shape[-1]
    project = torch.arange(bins, dtype=box_dists.dtype, device=box_dists.device)
    return box_dists.softmax(-1) @ project


def decode_boxes(box_dists: torch.Tensor, geometry: GridGeometry, *, clamp: bool = True) -> torch.Tensor:
    """Turn ``(..., G, G, 4, B)`` logits into ``(..., G, G, 4)`` normalized corner boxes.

    With ``clamp=False`` boxes may extend past the image border.
    """
    sides = side_distances(box_dists) / geometry.grid
    cx, cy = geometry.cell_centers()
    cx = cx.to(dtype=sides.dtype, device=sides.device)
    cy = cy.to(dtype=sides.dtype, device=sides.device)
    boxes = torch.stack(
        [cx - sides[..., 0], cy - sides[..., 1], cx + sides[..., 2], cy + sides[..., 3]],
        dim=-1,
    )
    return boxes.clamp(0.0, 1.0) if clamp else boxes


def two_bin_logits(d: float, bins: int, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """Logits putting mass ``r - d`` on bin ``floor(d)`` and ``d - l`` on the next bin.

    This is the minimizer of the two-bin distribution loss for target ``d``;
    its softmax expectation is exactly ``d``.  Bins without mass get ``-inf``.
    """
    if not 0.0 <= d <= bins - 1:
        msg = f"d={d} outside the bin range [0, {bins - 1}]"
        raise ValueError(msg)
    left = min(math.floor(d), bins - 1)
    right = min(left + 1, bins - 1)
    probs = torch.zeros(bins, dtype=dtype)
    probs[left] += (left + 1) - d
    probs[right] += d - left
    return probs.log()
