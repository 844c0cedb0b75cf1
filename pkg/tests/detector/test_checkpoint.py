"""Unit tests for checkpoint save/load."""

from __future__ import annotations

from pathlib import Path

import pytest
import torch
from torch import nn

from sparsedet.detector.checkpoint import CheckpointNotFoundError, load_checkpoint, save_checkpoint
from sparsedet.detector.network import GridDetector
from sparsedet.models.training import ModelConfig


@pytest.fixture
def model() -> GridDetector:
    torch.manual_seed(0)
    model = GridDetector(num_classes=2, config=ModelConfig(width=8, bins=8), image_size=32)
    nn.init.normal_(model.cls_head.weight)
    return model


def test_round_trip_is_bit_exact(tmp_path: Path, model: GridDetector) -> None:
    path = tmp_path / "ckpt.pt"
    save_checkpoint(
        path,
        model,
        dataset_fingerprint="d" * 64,
        catalog_fingerprint="c" * 64,
        scene_fingerprint="s" * 64,
        config_json='{"name": "x"}',
        extra={"epoch": 3, "val_map50": 0.25},
    )
    ckpt = load_checkpoint(path)

    assert ckpt.num_classes == 2
    assert ckpt.image_size == 32
    assert ckpt.model == ModelConfig(width=8, bins=8)
    assert ckpt.dataset_fingerprint == "d" * 64
    assert ckpt.catalog_fingerprint == "c" * 64
    assert ckpt.scene_fingerprint == "s" * 64
    assert ckpt.config_json == '{"name": "x"}'
    assert ckpt.extra == {"epoch": 3, "val_map50": 0.25}
    for key, value in model.state_dict().items():
        assert torch.equal(ckpt.state_dict[key], value)


def test_rebuilt_model_predicts_identically(tmp_path: Path, model: GridDetector) -> None:
    save_checkpoint(tmp_path / "ckpt.pt", model)
    rebuilt = load_checkpoint(tmp_path / "ckpt.pt").build_model()

    images = torch.rand(2, 3, 32, 32)
    assert torch.equal(rebuilt(images).class_scores, model(images).class_scores)
    assert not rebuilt.training


def test_missing_checkpoint(tmp_path: Path) -> None:
    with pytest.raises(CheckpointNotFoundError, match="not found"):
        load_checkpoint(tmp_path / "missing.pt")
