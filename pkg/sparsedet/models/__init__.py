"""Domain models for the sparsedet benchmark.

Configuration schemas and reports are pydantic models so they serialise to
``config.toml`` / JSON; array-carrying containers (samples) are dataclasses.
"""

from sparsedet.models.catalog import ClassCatalog, ClassSpec
from sparsedet.models.enums import ClassGroup, MatchingRule, RunKind, SplitName, StatusCode, Texture
from sparsedet.models.evaluation import (
    ClassMetrics,
    Detection,
    EvalConfig,
    EvalReport,
    GroundTruth,
    GroupMetrics,
    PRCurve,
)
from sparsedet.models.experiment import (
    ComparisonConfig,
    ComparisonReport,
    ExperimentConfig,
    MetricSummary,
    RunManifest,
    RunRecord,
)
from sparsedet.models.scene import (
    ClassAppearance,
    DatasetSplit,
    DatasetStats,
    LabelCapConfig,
    LabelingEffort,
    PartitionStats,
    SceneConfig,
    SceneSample,
    SplitConfig,
)
from sparsedet.models.training import AugmentConfig, CfplConfig, LossWeights, ModelConfig, TrainConfig

__all__ = [
    "AugmentConfig",
    "CfplConfig",
    "ClassAppearance",
    "ClassCatalog",
    "ClassGroup",
    "ClassMetrics",
    "ClassSpec",
    "ComparisonConfig",
    "ComparisonReport",
    "DatasetSplit",
    "DatasetStats",
    "Detection",
    "EvalConfig",
    "EvalReport",
    "ExperimentConfig",
    "GroundTruth",
    "GroupMetrics",
    "LabelCapConfig",
    "LabelingEffort",
    "LossWeights",
    "MatchingRule",
    "MetricSummary",
    "ModelConfig",
    "PRCurve",
    "PartitionStats",
    "RunKind",
    "RunManifest",
    "RunRecord",
    "SceneConfig",
    "SceneSample",
    "SplitConfig",
    "SplitName",
    "StatusCode",
    "Texture",
    "TrainConfig",
]
