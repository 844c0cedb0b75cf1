"""Shared enumerations used across the benchmark."""

from __future__ import annotations

from enum import StrEnum

# -- Classes -----------------------------------------------------------------


class StatusCode(StrEnum):
    """Brood cell status letter code (second half of a class name)."""

    DEAD = "D"
    FOOD = "F"
    HATCHED = "H"
    LARVA = "L"
    PREPUPA = "P"


class ClassGroup(StrEnum):
    """Label-cap group.

    - ``majority``: more instances than the cap; unlabeled instances remain.
    - ``minority``: at most the cap; every instance is labeled.
    """

    MAJORITY = "majority"
    MINORITY = "minority"


# -- Scenes ------------------------------------------------------------------


class Texture(StrEnum):
    """Texture family painted inside a synthetic brood cell."""

    SOLID = "solid"
    HSTRIPES = "hstripes"
    VSTRIPES = "vstripes"
    DOTS = "dots"
    CHECKER = "checker"
    RING = "ring"


class SplitName(StrEnum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


# -- Evaluation --------------------------------------------------------------


class MatchingRule(StrEnum):
    """One-to-one matching order used by the confusion matrix."""

    IOU = "iou"
    CONFIDENCE = "confidence"


class RunKind(StrEnum):
    BASELINE = "baseline"
    CFPL = "cfpl"
