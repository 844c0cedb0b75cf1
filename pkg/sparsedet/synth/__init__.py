"""Synthetic dense-scene datasets and the partial-labeling protocol."""

from sparsedet.synth.generator import PackingError, generate_dataset, generate_sample
from sparsedet.synth.protocol import (
    DegenerateSplitError,
    apply_label_cap,
    build_benchmark,
    class_counts,
    estimate_labeling_effort,
    split_dataset,
)

__all__ = [
    "DegenerateSplitError",
    "PackingError",
    "apply_label_cap",
    "build_benchmark",
    "class_counts",
    "estimate_labeling_effort",
    "generate_dataset",
    "generate_sample",
    "split_dataset",
]
