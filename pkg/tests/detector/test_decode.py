"""Unit tests for box decoding."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from sparsedet.detector.decode import decode_boxes, side_distances, two_bin_logits
from sparsedet.detector.network import GridGeometry

GEOMETRY = GridGeometry(image_size=64)


def test_uniform_logits_give_midpoint() -> None:
    sides = side_distances(torch.zeros(4, 16, dtype=torch.float64))
    assert sides.tolist() == pytest.approx([7.5] * 4)


@pytest.mark.parametrize("k", [0, 3, 15])
def test_one_hot_bin(k: int) -> None:
    logits = torch.full((16,), float("-inf"), dtype=torch.float64)
    logits[k] = 0.0
    assert side_distances(logits).item() == pytest.approx(k)


def test_half_half_mass() -> None:
    probs = torch.zeros(16, dtype=torch.float64)
    probs[3] = probs[4] = 0.5
    assert side_distances(probs.log()).item() == pytest.approx(3.5)


def test_two_bin_logits_reproduce_distance() -> None:
    rng = np.random.default_rng(0)
    for d in [0.0, 15.0, 7.0, *rng.uniform(0, 15, size=200)]:
        assert side_distances(two_bin_logits(float(d), 16)).item() == pytest.approx(d, abs=1e-6)


def test_two_bin_logits_range() -> None:
    with pytest.raises(ValueError, match="outside"):
        two_bin_logits(15.5, 16)
    with pytest.raises(ValueError, match="outside"):
        two_bin_logits(-0.1, 16)


def test_decode_around_cell_center() -> None:
    dists = torch.stack([two_bin_logits(d, 16) for d in (1.0, 0.5, 2.0, 1.5)])
    box_dists = dists.expand(1, 8, 8, 4, 16)
    boxes = decode_boxes(box_dists, GEOMETRY)

    cx, cy = 3.5 / 8, 2.5 / 8  # row 2, col 3
    expected = [cx - 1.0 / 8, cy - 0.5 / 8, cx + 2.0 / 8, cy + 1.5 / 8]
    assert boxes[0, 2, 3].tolist() == pytest.approx(expected, abs=1e-9)


def test_decode_clamps_to_image() -> None:
    box_dists = torch.zeros(1, 8, 8, 4, 16, dtype=torch.float64)  # 7.5 cells per side
    clamped = decode_boxes(box_dists, GEOMETRY)
    raw = decode_boxes(box_dists, GEOMETRY, clamp=False)

    assert clamped.min().item() == 0.0
    assert clamped.max().item() == 1.0
    assert raw[0, 0, 0, 0].item() == pytest.approx(0.5 / 8 - 7.5 / 8)
