"""Single-scale anchor-free grid detector.

The backbone is six conv-GroupNorm-SiLU blocks, three of them with stride 2,
so an ``H x W`` image maps to a ``G x G`` grid with ``G = H / 8``.  Every cell
predicts ``N_c`` class logits and, for each of its four sides (left, top,
right, bottom), ``B`` logits over the distances ``0 .. B-1`` in stride units.

GroupNorm is used instead of BatchNorm so the network has no running
statistics: a forward pass never mutates the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from sparsedet.models.training import ModelConfig


class ShapeMismatchError(ValueError):
    """Input batch does not match the configured image geometry."""

    def __init__(self, expected: tuple[int, ...], got: tuple[int, ...]) -> None:
        self.expected = expected
        self.got = got
        super().__init__(f"expected input of shape (batch, {', '.join(map(str, expected))}), got {tuple(got)}")


@dataclass(frozen=True)
class GridGeometry:
    """Image size, stride and bin count shared by assignment, decoding and the loss."""

    image_size: int
    stride: int = 8
    bins: int = 16

    def __post_init__(self) -> None:
        if self.image_size % self.stride:
            msg = f"image_size {self.image_size} is not a multiple of stride {self.stride}"
            raise ValueError(msg)

    @property
    def grid(self) -> int:
        return self.image_size // self.stride

    def cell_centers(self) -> tuple[torch.Tensor, torch.Tensor]:
        """Normalized ``(cx, cy)`` of every cell, each shaped ``(G, G)`` indexed ``[row, col]``."""
        coords = (torch.arange(self.grid, dtype=torch.float64) + 0.5) / self.grid
        cy, cx = torch.meshgrid(coords, coords, indexing="ij")
        return cx, cy

    @classmethod
    def from_config(cls, config: ModelConfig, image_size: int) -> GridGeometry:
        return cls(image_size=image_size, stride=config.stride, bins=config.bins)


@dataclass
class PredictionGrid:
    """Raw head outputs.

    ``class_scores`` is ``(batch, G, G, N_c)`` logits; ``box_dists`` is
    ``(batch, G, G, 4, B)`` logits over side-distance bins.
    """

    class_scores: torch.Tensor
    box_dists: torch.Tensor

    @property
    def batch_size(self) -> int:
        return self.class_scores.shape[0]


def _block(c_in: int, c_out: int, stride: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel_size=3, stride=stride, padding=1, bias=False),
        nn.GroupNorm(math.gcd(8, c_out), c_out),
        nn.SiLU(inplace=True),
    )


class GridDetector(nn.Module):
    """Conv backbone to a stride-8 grid with class and box-distribution heads."""

    def __init__(self, num_classes: int, config: ModelConfig | None = None, image_size: int = 256) -> None:
        super().__init__()
        config = config or ModelConfig()
        self.config = config
        self.num_classes = num_classes
        self.geometry = GridGeometry.from_config(config, image_size)

        w = config.width
        self.backbone = nn.Sequential(
            _block(3, w, 1),
            _block(w, w, 2),
            _block(w, 2 * w, 1),
            _block(2 * w, 2 * w, 2),
            _block(2 * w, 4 * w, 1),
            _block(4 * w, 4 * w, 2),
        )
        self.cls_head = nn.Conv2d(4 * w, num_classes, kernel_size=1)
        self.box_head = nn.Conv2d(4 * w, 4 * config.bins, kernel_size=1)
        for head in (self.cls_head, self.box_head):
            nn.init.zeros_(head.weight)
            nn.init.zeros_(head.bias)

    def forward(self, images: torch.Tensor) -> PredictionGrid:
        size = self.geometry.image_size
        if images.ndim != 4 or tuple(images.shape[1:]) != (3, size, size):
            raise ShapeMismatchError((3, size, size), tuple(images.shape))

        features = self.backbone(images)
        n, _, g, _ = features.shape
        scores = self.cls_head(features).permute(0, 2, 3, 1)
        dists = self.box_head(features).view(n, 4, self.config.bins, g, g).permute(0, 3, 4, 1, 2)
        return PredictionGrid(class_scores=scores.contiguous(), box_dists=dists.contiguous())
