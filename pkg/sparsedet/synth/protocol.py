"""Partial-labeling protocol: splitting, per-class label caps and effort accounting."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from loguru import logger

from sparsedet.models.catalog import ClassCatalog
from sparsedet.models.experiment import ExperimentConfig
from sparsedet.models.scene import DatasetSplit, LabelingEffort, SceneSample
from sparsedet.synth.generator import generate_dataset

MIN_SPLIT_SIZE = 10


class DegenerateSplitError(ValueError):
    """Too few samples to produce three meaningful partitions."""

    def __init__(self, size: int) -> None:
        super().__init__(f"cannot split {size} samples; at least {MIN_SPLIT_SIZE} are required")


# ---------------------------------------------------------------------------
# Label cap
# ---------------------------------------------------------------------------


def apply_label_cap(
    samples: Sequence[SceneSample],
    catalog: ClassCatalog,
    cap: int | None,
    seed: int,
) -> tuple[list[SceneSample], ClassCatalog]:
    """Keep at most ``cap`` labeled instances per class.

    The retained instances of class ``c`` are a uniform draw without
    replacement from ``default_rng([seed, c])``.  Classes with more instances
    than ``cap`` become majority and whitelisted; the rest become minority.
    Oracle ground truth is never touched.  ``cap=None`` keeps every label.
    """
    num_classes = len(catalog)
    instances: list[list[tuple[int, int]]] = [[] for _ in range(num_classes)]
    for s_idx, sample in enumerate(samples):
        for i_idx, cls in enumerate(sample.gt_classes):
            instances[int(cls)].append((s_idx, i_idx))

    visible: list[set[int]] = [set() for _ in samples]
    majority: set[int] = set()
    for cls, members in enumerate(instances):
        if cap is None or len(members) <= cap:
            chosen = members
        else:
            majority.add(cls)
            rng = np.random.default_rng([seed, cls])
            picks = rng.choice(len(members), size=cap, replace=False)
            chosen = [members[int(k)] for k in np.sort(picks)]
        for s_idx, i_idx in chosen:
            visible[s_idx].add(i_idx)

    capped = [sample.with_visible(tuple(v)) for sample, v in zip(samples, visible, strict=True)]
    updated = catalog.with_groups(majority)
    for cls in sorted(majority):
        logger.info(
            "Capped class {} ({}): {} of {} instances labeled",
            cls,
            catalog[cls].name,
            cap,
            len(instances[cls]),
        )
    return capped, updated


# ---------------------------------------------------------------------------
# Split
# ---------------------------------------------------------------------------


def partition_sizes(total: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding; ties go to the earlier partition."""
    quotas = [total * f for f in fractions]
    sizes = [math.floor(q) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes, strict=True)]
    leftover = total - sum(sizes)
    order = sorted(range(len(fractions)), key=lambda k: (-remainders[k], k))
    for k in order[:leftover]:
        sizes[k] += 1
    return sizes


def split_dataset(
    samples: Sequence[SceneSample],
    fractions: tuple[float, float, float],
    seed: int,
) -> DatasetSplit:
    """Shuffle under ``seed`` and cut into train/val/test.

    All partitions come back fully labeled; capping is applied to the train
    partition afterwards.
    """
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        msg = f"split fractions must sum to 1, got {fractions}"
        raise ValueError(msg)
    if len(samples) < MIN_SPLIT_SIZE:
        raise DegenerateSplitError(len(samples))

    n_train, n_val, _ = partition_sizes(len(samples), fractions)
    order = np.random.default_rng(seed).permutation(len(samples))
    shuffled = [samples[int(k)].fully_labeled() for k in order]
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        fractions=fractions,
    )


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def build_benchmark(config: ExperimentConfig) -> tuple[DatasetSplit, ClassCatalog]:
    """Generate, split and cap the train partition, in that order."""
    samples = generate_dataset(config.scene, config.seed)
    split = split_dataset(samples, config.split.fractions, config.seed)
    split.train, catalog = apply_label_cap(split.train, config.scene.catalog(), config.label_cap.cap, config.seed)
    logger.info(
        "Benchmark split {}/{}/{}; whitelist {}",
        len(split.train),
        len(split.val),
        len(split.test),
        sorted(catalog.whitelist),
    )
    return split, catalog


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def class_counts(samples: Sequence[SceneSample], num_classes: int, *, visible_only: bool) -> list[int]:
    """Per-class instance counts over ``samples``."""
    counts = np.zeros(num_classes, dtype=np.int64)
    for sample in samples:
        classes = sample.visible_classes if visible_only else sample.gt_classes
        counts += np.bincount(classes.astype(np.int64), minlength=num_classes)
    return [int(c) for c in counts]


def estimate_labeling_effort(samples: Sequence[SceneSample], seconds_per_box: float = 21.0) -> LabelingEffort:
    """Annotation time of the visible labels vs labeling every instance."""
    return LabelingEffort(
        seconds_per_box=seconds_per_box,
        labeled_boxes=sum(len(s.visible_labels) for s in samples),
        total_boxes=sum(len(s.gt_classes) for s in samples),
    )
