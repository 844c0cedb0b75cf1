"""Tests for the composite loss and its breakdown."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from sparsedet.detector.assign import TargetAssignment, assign_targets
from sparsedet.detector.decode import decode_boxes
from sparsedet.detector.network import GridGeometry, PredictionGrid
from sparsedet.loss import LossBreakdown, bce_loss, ciou_loss, compute_cfpl_mask, dfl_loss, total_loss
from sparsedet.models.training import CfplConfig, LossWeights

F64 = torch.float64
GEOMETRY = GridGeometry(image_size=64)
NUM_CLASSES = 3
OFF = CfplConfig()
ON = CfplConfig(enabled=True, whitelist=[0, 1])


def _case(seed: int) -> tuple[PredictionGrid, TargetAssignment]:
    rng = np.random.default_rng(seed)
    gt = []
    for _ in range(2):
        n = int(rng.integers(1, 6))
        xy = rng.uniform(0.15, 0.85, size=(n, 2))
        wh = rng.uniform(0.1, 0.3, size=(n, 2))
        gt.append((rng.integers(0, NUM_CLASSES, size=n), np.concatenate([xy, wh], axis=1)))
    assignment = assign_targets(gt, GEOMETRY, NUM_CLASSES)
    grid = PredictionGrid(
        class_scores=torch.tensor(rng.normal(0, 2, size=(2, 8, 8, NUM_CLASSES)), dtype=F64),
        box_dists=torch.tensor(rng.normal(0, 1, size=(2, 8, 8, 4, 16)), dtype=F64),
    )
    return grid, assignment


def test_weights_isolate_bce() -> None:
    grid, assignment = _case(0)
    total, parts = total_loss(grid, assignment, LossWeights(lambda_ciou=0, lambda_dfl=0, lambda_bce=1), OFF, GEOMETRY)

    targets = assignment.class_targets(NUM_CLASSES).to(F64)
    assert total.item() == pytest.approx(bce_loss(grid.class_scores, targets).item())
    assert parts.bce == pytest.approx(total.item())


def test_disabled_masking_matches_baseline_bit_for_bit() -> None:
    weights = LossWeights()
    for seed in range(10):
        grid, assignment = _case(seed)
        total, parts = total_loss(grid, assignment, weights, OFF, GEOMETRY, catalog_whitelist=[0, 1, 2])

        targets = assignment.class_targets(NUM_CLASSES).to(F64)
        l_bce = bce_loss(grid.class_scores, targets)
        pred_boxes = decode_boxes(grid.box_dists, GEOMETRY, clamp=False)
        l_ciou = ciou_loss(pred_boxes, assignment.target_xyxy, assignment.fg_mask)
        l_dfl = dfl_loss(grid.box_dists, assignment.target_box, assignment.fg_mask)
        baseline = weights.lambda_ciou * l_ciou + weights.lambda_dfl * l_dfl + weights.lambda_bce * l_bce

        assert torch.equal(total, baseline)
        assert parts.masked_count == 0

        empty, _ = total_loss(grid, assignment, weights, CfplConfig(enabled=True, whitelist=[]), GEOMETRY)
        assert torch.equal(empty, total)


def test_masking_never_increases_the_loss() -> None:
    for seed in range(100):
        grid, assignment = _case(seed)
        on, _ = total_loss(grid, assignment, LossWeights(), ON, GEOMETRY)
        off, _ = total_loss(grid, assignment, LossWeights(), OFF, GEOMETRY)
        assert on.item() <= off.item()


def test_masked_entries_get_no_gradient() -> None:
    grid, assignment = _case(3)
    scores = grid.class_scores.clone().requires_grad_()
    grid = PredictionGrid(class_scores=scores, box_dists=grid.box_dists)

    total, parts = total_loss(grid, assignment, LossWeights(), ON, GEOMETRY)
    total.backward()
    mask = compute_cfpl_mask(scores, assignment.gt_area_mask, ON).mask
    assert parts.masked_count > 0
    assert torch.count_nonzero(scores.grad[mask == 0]) == 0
    assert torch.count_nonzero(scores.grad[mask == 1]) > 0

    # central differences agree at a few masked entries
    for cell in torch.nonzero(mask == 0)[:5].tolist():
        index = tuple(cell)
        plus, minus = scores.detach().clone(), scores.detach().clone()
        plus[index] += 1e-4
        minus[index] -= 1e-4
        up, _ = total_loss(PredictionGrid(plus, grid.box_dists), assignment, LossWeights(), ON, GEOMETRY)
        down, _ = total_loss(PredictionGrid(minus, grid.box_dists), assignment, LossWeights(), ON, GEOMETRY)
        assert abs((up - down).item() / 2e-4) <= 1e-5


def test_breakdown_record() -> None:
    grid, assignment = _case(1)
    _, parts = total_loss(grid, assignment, LossWeights(), CfplConfig(enabled=True, whitelist=[2]), GEOMETRY)

    assert len(parts.thresholds) == NUM_CLASSES
    assert parts.thresholds[0] == float("inf")
    line = parts.log_line(7).split(",")
    assert line[0] == "7"
    assert line[5] == str(parts.masked_count)
    assert line[6:8] == ["inf", "inf"]
    assert len(line) == len(LossBreakdown.header(NUM_CLASSES))
