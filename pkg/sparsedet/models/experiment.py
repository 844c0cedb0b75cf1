"""Experiment-level models: the config file schema, run manifests and
paired-comparison results.
"""

from __future__ import annotations

from datetime import datetime
from typing import Self

from pydantic import BaseModel, Field, model_validator

from sparsedet.models.enums import RunKind
from sparsedet.models.evaluation import EvalConfig, EvalReport
from sparsedet.models.scene import LabelCapConfig, SceneConfig, SplitConfig
from sparsedet.models.training import TrainConfig


class ComparisonConfig(BaseModel):
    """Paired baseline/CFPL runs."""

    n_seeds: int = Field(default=3, ge=1, description="Seeds per arm (3 at desk scale, 5 at full scale)")


class ExperimentConfig(BaseModel):
    """Root of ``config.toml``.  Every field has a default; an empty file is valid."""

    name: str = "default"
    seed: int = 0
    scene: SceneConfig = Field(default_factory=SceneConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    label_cap: LabelCapConfig = Field(default_factory=LabelCapConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    comparison: ComparisonConfig = Field(default_factory=ComparisonConfig)

    @model_validator(mode="after")
    def _validate_image_size(self) -> Self:
        if self.train.image_size != self.scene.image_size:
            msg = f"train.image_size ({self.train.image_size}) must equal scene.image_size ({self.scene.image_size})"
            raise ValueError(msg)
        return self

    @property
    def comparison_seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.comparison.n_seeds)]


class RunManifest(BaseModel):
    """Provenance of one output directory (``manifest.json``)."""

    command: str
    config_path: str | None = None
    dataset_fingerprint: str | None = None
    catalog_fingerprint: str | None = None
    seeds: list[int] = Field(default_factory=list)
    tool_version: str
    started_at: datetime
    finished_at: datetime | None = None


# -- Comparison --------------------------------------------------------------


class RunRecord(BaseModel):
    """Outcome of one arm/seed of a comparison."""

    kind: RunKind
    seed: int
    run_dir: str | None = None
    report: EvalReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None


class MetricSummary(BaseModel):
    """Mean and sample standard deviation of one metric over seeds."""

    values: list[float] = Field(default_factory=list)
    mean: float | None = None
    std: float | None = Field(default=None, description="Undefined (null) with fewer than two values")


class ComparisonReport(BaseModel):
    """Aggregate of all paired runs, shaped like the group metrics table."""

    seeds: list[int] = Field(default_factory=list)
    runs: list[RunRecord] = Field(default_factory=list)
    summary: dict[str, dict[str, MetricSummary]] = Field(
        default_factory=dict,
        description="summary[kind][metric] -> MetricSummary",
    )

    def delta(self, metric: str) -> float | None:
        """CFPL mean minus baseline mean."""
        base = self.summary.get(RunKind.BASELINE, {}).get(metric)
        cfpl = self.summary.get(RunKind.CFPL, {}).get(metric)
        if base is None or cfpl is None or base.mean is None or cfpl.mean is None:
            return None
        return cfpl.mean - base.mean
