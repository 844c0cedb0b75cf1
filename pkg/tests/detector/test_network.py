"""Unit tests for the grid detector network."""

from __future__ import annotations

import pytest
import torch
from pydantic import ValidationError
from torch import nn

from sparsedet.detector.network import GridDetector, GridGeometry, ShapeMismatchError
from sparsedet.models.training import ModelConfig

SIZE = 64


@pytest.fixture
def model() -> GridDetector:
    torch.manual_seed(0)
    return GridDetector(num_classes=3, config=ModelConfig(width=8), image_size=SIZE)


def _randomize_heads(model: GridDetector) -> None:
    torch.manual_seed(1)
    for head in (model.cls_head, model.box_head):
        nn.init.normal_(head.weight, std=0.1)
        nn.init.normal_(head.bias, std=0.1)


def test_output_shapes(model: GridDetector) -> None:
    grid = model(torch.rand(2, 3, SIZE, SIZE))
    assert grid.class_scores.shape == (2, 8, 8, 3)
    assert grid.box_dists.shape == (2, 8, 8, 4, 16)
    assert grid.batch_size == 2


def test_zero_initialized_heads_give_zero_outputs(model: GridDetector) -> None:
    grid = model(torch.zeros(1, 3, SIZE, SIZE))
    assert torch.count_nonzero(grid.class_scores) == 0
    assert torch.count_nonzero(grid.box_dists) == 0


def test_outputs_are_finite(model: GridDetector) -> None:
    _randomize_heads(model)
    grid = model(torch.rand(2, 3, SIZE, SIZE))
    assert torch.isfinite(grid.class_scores).all()
    assert torch.isfinite(grid.box_dists).all()


def test_forward_is_deterministic_and_stateless(model: GridDetector) -> None:
    _randomize_heads(model)
    images = torch.rand(2, 3, SIZE, SIZE)
    before = {k: v.clone() for k, v in model.state_dict().items()}

    a = model(images)
    b = model(images)
    assert torch.equal(a.class_scores, b.class_scores)
    assert torch.equal(a.box_dists, b.box_dists)
    for key, value in model.state_dict().items():
        assert torch.equal(value, before[key])


def test_backbone_downsamples_three_times(model: GridDetector) -> None:
    convs = [m for m in model.backbone.modules() if isinstance(m, nn.Conv2d)]
    assert len(convs) == 6
    assert sum(1 for c in convs if c.stride == (2, 2)) == 3
    assert any(isinstance(m, nn.GroupNorm) for m in model.backbone.modules())


@pytest.mark.parametrize("shape", [(1, 3, 32, 32), (1, 1, SIZE, SIZE), (3, SIZE, SIZE)])
def test_wrong_input_shape_is_rejected(model: GridDetector, shape: tuple[int, ...]) -> None:
    with pytest.raises(ShapeMismatchError, match="expected input"):
        model(torch.zeros(shape))


def test_geometry() -> None:
    geometry = GridGeometry(image_size=SIZE)
    assert geometry.grid == 8
    cx, cy = geometry.cell_centers()
    assert cx[0, 1].item() == pytest.approx(1.5 / 8)
    assert cy[1, 0].item() == pytest.approx(1.5 / 8)

    with pytest.raises(ValueError, match="multiple"):
        GridGeometry(image_size=60)


def test_model_config_rejects_other_strides() -> None:
    with pytest.raises(ValidationError, match="stride must be 8"):
        ModelConfig(stride=16)
