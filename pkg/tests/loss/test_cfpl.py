"""Unit and property tests for constrained false positive masking."""

from __future__ import annotations

import math

import numpy as np
import pytest
import torch

from sparsedet.loss import bce_loss, compute_cfpl_mask
from sparsedet.models.training import CfplConfig

F64 = torch.float64
TRIALS = 1000


def _row(*probs: float) -> torch.Tensor:
    """A 1 x 3 grid with one class, as logits."""
    return torch.logit(torch.tensor(probs, dtype=F64)).reshape(1, 3, 1)


def _area(*cells: bool) -> torch.Tensor:
    return torch.tensor(cells).reshape(1, 3, 1)


ENABLED = CfplConfig(enabled=True, whitelist=[0])


def test_hand_trace_masks_confident_outsider() -> None:
    result = compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), ENABLED)
    assert result.thresholds.tolist() == pytest.approx([0.8])
    assert result.mask.flatten().tolist() == [1.0, 0.0, 1.0]
    assert result.masked_count == 1


def test_hand_trace_nothing_above_threshold() -> None:
    result = compute_cfpl_mask(_row(0.95, 0.9, 0.3), _area(True, False, False), ENABLED)
    assert result.thresholds.tolist() == pytest.approx([0.95])
    assert result.mask.flatten().tolist() == [1.0, 1.0, 1.0]


def test_empty_whitelist_masks_nothing() -> None:
    cfg = CfplConfig(enabled=True, whitelist=[])
    result = compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), cfg)
    assert (result.mask == 1).all()
    assert math.isinf(result.thresholds.item())


def test_disabled_config_masks_nothing() -> None:
    result = compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), CfplConfig(), [0])
    assert result.masked_count == 0


def test_catalog_whitelist_is_the_default() -> None:
    cfg = CfplConfig(enabled=True)
    assert compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), cfg, [0]).masked_count == 1
    assert compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), cfg, []).masked_count == 0


def test_class_without_ground_truth_area_keeps_infinite_threshold() -> None:
    result = compute_cfpl_mask(_row(0.8, 0.9, 0.99), _area(False, False, False), ENABLED)
    assert math.isinf(result.thresholds.item())
    assert result.masked_count == 0


def test_threshold_quantile() -> None:
    scores = torch.logit(torch.tensor([0.2, 0.6, 0.4, 0.5, 0.9], dtype=F64)).reshape(1, 5, 1)
    area = torch.tensor([True, True, False, False, False]).reshape(1, 5, 1)
    low = compute_cfpl_mask(scores, area, ENABLED)
    high = compute_cfpl_mask(scores, area, CfplConfig(enabled=True, whitelist=[0], threshold_quantile=1.0))

    assert low.thresholds.item() == pytest.approx(0.2)
    assert low.mask.flatten().tolist() == [1.0, 1.0, 0.0, 0.0, 0.0]
    assert high.thresholds.item() == pytest.approx(0.6)
    assert high.mask.flatten().tolist() == [1.0, 1.0, 1.0, 1.0, 0.0]


def test_mask_carries_no_gradient() -> None:
    scores = _row(0.8, 0.9, 0.3).requires_grad_()
    result = compute_cfpl_mask(scores, _area(True, False, False), ENABLED)
    assert not result.mask.requires_grad


def test_invalid_inputs() -> None:
    with pytest.raises(ValueError, match="does not match"):
        compute_cfpl_mask(_row(0.8, 0.9, 0.3), torch.zeros(1, 3, 2, dtype=torch.bool), ENABLED)
    with pytest.raises(ValueError, match="outside the catalog range"):
        compute_cfpl_mask(_row(0.8, 0.9, 0.3), _area(True, False, False), CfplConfig(enabled=True, whitelist=[4]))


# ---------------------------------------------------------------------------
# Properties over random grids
# ---------------------------------------------------------------------------


def _random_case(rng: np.random.Generator) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, list[int]]:
    num_classes = int(rng.integers(1, 5))
    shape = (int(rng.integers(1, 3)), 4, 4, num_classes)
    scores = torch.tensor(rng.normal(0, 3, size=shape), dtype=F64)
    area = torch.tensor(rng.random(shape) < 0.2)
    targets = (area & torch.tensor(rng.random(shape) < 0.5)).to(F64)
    whitelist = [c for c in range(num_classes) if rng.random() < 0.6]
    return scores, area, targets, whitelist


def test_mask_properties_on_random_grids() -> None:
    rng = np.random.default_rng(0)
    for _ in range(TRIALS):
        scores, area, targets, whitelist = _random_case(rng)
        result = compute_cfpl_mask(scores, area, CfplConfig(enabled=True, whitelist=whitelist))
        mask = result.mask
        probs = scores.sigmoid()

        assert set(mask.unique().tolist()) <= {0.0, 1.0}
        assert (mask[area] == 1).all()
        for c in range(scores.shape[-1]):
            if c not in whitelist:
                assert (mask[..., c] == 1).all()
                continue
            dropped = mask[..., c] == 0
            expected = ~area[..., c] & (probs[..., c] > result.thresholds[c])
            assert torch.equal(dropped, expected)

        assert bce_loss(scores, targets, mask).item() <= bce_loss(scores, targets).item()


def test_masked_count_is_monotone_in_quantile() -> None:
    rng = np.random.default_rng(1)
    quantiles = [0.0, 0.25, 0.5, 0.75, 1.0]
    for _ in range(TRIALS):
        scores, area, _, whitelist = _random_case(rng)
        counts = [
            compute_cfpl_mask(
                scores, area, CfplConfig(enabled=True, whitelist=whitelist, threshold_quantile=q)
            ).masked_count
            for q in quantiles
        ]
        assert counts == sorted(counts, reverse=True)
