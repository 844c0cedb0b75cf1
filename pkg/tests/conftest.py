"""Shared test fixtures: small scene and experiment configs.

Everything runs on CPU with tiny images; the default suite finishes in
a few minutes.  Training-heavy checks are marked ``slow`` or
``benchmark``.
"""

from __future__ import annotations

from collections.abc import Iterator

import pytest

from sparsedet.models.experiment import ComparisonConfig, ExperimentConfig
from sparsedet.models.scene import LabelCapConfig, SceneConfig
from sparsedet.models.training import AugmentConfig, ModelConfig, TrainConfig
from sparsedet.settings import _get_settings_cached

SMALL_SIZE = 64


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path) -> Iterator[None]:
    """Force CPU and a throwaway runs root; re-read settings per test."""
    monkeypatch.setenv("SPARSEDET_DEVICE", "cpu")
    monkeypatch.setenv("SPARSEDET_RUNS_ROOT", str(tmp_path / "runs"))
    _get_settings_cached.cache_clear()
    yield
    _get_settings_cached.cache_clear()


@pytest.fixture
def small_scene() -> SceneConfig:
    return SceneConfig(
        num_images=12,
        image_size=SMALL_SIZE,
        cells_per_image=(4, 6),
        cavity_rows=2,
    )


@pytest.fixture
def small_train() -> TrainConfig:
    return TrainConfig(
        epochs=1,
        batch_size=4,
        image_size=SMALL_SIZE,
        model=ModelConfig(width=8),
        augment=AugmentConfig(enabled=True),
    )


@pytest.fixture
def small_config(small_scene: SceneConfig, small_train: TrainConfig) -> ExperimentConfig:
    return ExperimentConfig(
        name="small",
        seed=5,
        scene=small_scene,
        label_cap=LabelCapConfig(cap=4),
        train=small_train,
        comparison=ComparisonConfig(n_seeds=1),
    )
