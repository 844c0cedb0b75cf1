"""Shared fixtures for training and comparison tests."""

from __future__ import annotations

import pytest

from sparsedet.models.catalog import ClassCatalog
from sparsedet.models.experiment import ExperimentConfig
from sparsedet.models.scene import DatasetSplit
from sparsedet.synth.protocol import build_benchmark


@pytest.fixture
def benchmark_data(small_config: ExperimentConfig) -> tuple[DatasetSplit, ClassCatalog]:
    """12 tiny images split 8/3/1 with the train partition capped."""
    return build_benchmark(small_config)
