"""Training, augmentation and paired comparison."""

from sparsedet.engine.augment import augment
from sparsedet.engine.comparison import aggregate, run_arm, run_comparison
from sparsedet.engine.trainer import MetricsLog, NonFiniteLossError, TrainResult, seed_everything, train

__all__ = [
    "MetricsLog",
    "NonFiniteLossError",
    "TrainResult",
    "aggregate",
    "augment",
    "run_arm",
    "run_comparison",
    "seed_everything",
    "train",
]
