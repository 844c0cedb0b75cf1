"""Synthetic scene configuration and sample containers.

Configuration objects are pydantic models (they are written to and read from
``config.toml``).  Samples carry numpy arrays and are plain dataclasses.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Self

import numpy as np
from pydantic import BaseModel, Field, field_serializer, field_validator, model_validator

from sparsedet.models.catalog import ClassCatalog, ClassSpec
from sparsedet.models.enums import StatusCode, Texture

_UNBOUNDED = {"inf", "none", "unbounded"}

# -- Configuration -----------------------------------------------------------


class ClassAppearance(BaseModel):
    """How one class is drawn and how often it occurs."""

    name: str
    status_code: StatusCode
    weight: float = Field(gt=0, description="Relative long-tail frequency weight")
    color: tuple[float, float, float] = Field(description="Base RGB color in [0, 1]")
    texture: Texture = Texture.SOLID

    @model_validator(mode="after")
    def _validate_color(self) -> Self:
        if any(not 0.0 <= v <= 1.0 for v in self.color):
            msg = f"color of '{self.name}' must lie in [0, 1], got {self.color}"
            raise ValueError(msg)
        return self


def _default_classes() -> list[ClassAppearance]:
    return [
        ClassAppearance(
            name="Osmia bicornis - Prepupa",
            status_code=StatusCode.PREPUPA,
            weight=0.5,
            color=(0.85, 0.62, 0.25),
            texture=Texture.SOLID,
        ),
        ClassAppearance(
            name="Osmia cornuta - Larva",
            status_code=StatusCode.LARVA,
            weight=0.3,
            color=(0.92, 0.90, 0.78),
            texture=Texture.HSTRIPES,
        ),
        ClassAppearance(
            name="Heriades - Prepupa",
            status_code=StatusCode.PREPUPA,
            weight=0.1,
            color=(0.35, 0.55, 0.85),
            texture=Texture.DOTS,
        ),
        ClassAppearance(
            name="Trypoxylon - Food",
            status_code=StatusCode.FOOD,
            weight=0.05,
            color=(0.30, 0.70, 0.35),
            texture=Texture.CHECKER,
        ),
        ClassAppearance(
            name="Hylaeus - Dead",
            status_code=StatusCode.DEAD,
            weight=0.03,
            color=(0.55, 0.25, 0.60),
            texture=Texture.VSTRIPES,
        ),
        ClassAppearance(
            name="Chelostoma florisomne - Hatched",
            status_code=StatusCode.HATCHED,
            weight=0.02,
            color=(0.90, 0.30, 0.30),
            texture=Texture.RING,
        ),
    ]


class SceneConfig(BaseModel):
    """Parameters of the synthetic dense-scene generator."""

    num_images: int = Field(default=300, ge=0)
    image_size: int = Field(default=256, gt=0)
    classes: list[ClassAppearance] = Field(default_factory=_default_classes, min_length=1)
    cells_per_image: tuple[int, int] = (24, 36)
    cavity_rows: int = Field(default=6, ge=1)
    cell_width: tuple[float, float] = Field(default=(0.09, 0.15), description="Fraction of image width")
    cell_fill: tuple[float, float] = Field(default=(0.70, 0.90), description="Fraction of the row height")
    packing_iou: float = Field(default=0.3, gt=0, le=0.3)
    placement_retries: int = Field(default=200, ge=1)
    color_jitter: float = Field(default=0.06, ge=0)
    pixel_noise: float = Field(default=0.03, ge=0)

    @model_validator(mode="after")
    def _validate_ranges(self) -> Self:
        lo, hi = self.cells_per_image
        if not 0 <= lo <= hi:
            msg = f"cells_per_image must satisfy 0 <= min <= max, got {self.cells_per_image}"
            raise ValueError(msg)
        for name in ("cell_width", "cell_fill"):
            a, b = getattr(self, name)
            if not 0 < a <= b <= 1:
                msg = f"{name} must satisfy 0 < min <= max <= 1, got {(a, b)}"
                raise ValueError(msg)
        return self

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def class_weights(self) -> np.ndarray:
        w = np.array([c.weight for c in self.classes], dtype=np.float64)
        return w / w.sum()

    def catalog(self) -> ClassCatalog:
        """Catalog with every class minority (before any label cap)."""
        return ClassCatalog(
            classes=[ClassSpec(id=i, name=c.name, status_code=c.status_code) for i, c in enumerate(self.classes)]
        )

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()


class SplitConfig(BaseModel):
    """Train/val/test fractions, in that order."""

    fractions: tuple[float, float, float] = (0.7, 0.2, 0.1)

    @model_validator(mode="after")
    def _validate_fractions(self) -> Self:
        if any(f < 0 for f in self.fractions) or not math.isclose(sum(self.fractions), 1.0, abs_tol=1e-9):
            msg = f"split fractions must be non-negative and sum to 1, got {self.fractions}"
            raise ValueError(msg)
        return self


class LabelCapConfig(BaseModel):
    """Per-class label budget applied to the train partition.

    ``cap = "inf"`` in a config file disables the cap.
    """

    cap: int | None = Field(default=300, ge=1, description='None (written as "inf") means no cap')
    seconds_per_box: float = Field(default=21.0, ge=0, description="Annotation cost used for effort reporting")

    @field_validator("cap", mode="before")
    @classmethod
    def _parse_unbounded(cls, value: object) -> object:
        if isinstance(value, str) and value.strip().lower() in _UNBOUNDED:
            return None
        if isinstance(value, float) and math.isinf(value) and value > 0:
            return None
        return value

    @field_serializer("cap")
    def _dump_cap(self, cap: int | None) -> int | str:
        return "inf" if cap is None else cap


# -- Samples -----------------------------------------------------------------


@dataclass(eq=False)
class SceneSample:
    """One synthetic image with oracle ground truth and its visible subset.

    ``gt_boxes`` are normalized ``(cx, cy, w, h)``; ``visible_labels`` indexes
    into ``gt_classes`` / ``gt_boxes``.
    """

    image: np.ndarray
    gt_classes: np.ndarray
    gt_boxes: np.ndarray
    visible_labels: tuple[int, ...]
    seed: int
    index: int = 0

    @property
    def stem(self) -> str:
        return f"scene_{self.index:05d}"

    @property
    def full_gt(self) -> list[tuple[int, tuple[float, float, float, float]]]:
        return [
            (int(c), (float(b[0]), float(b[1]), float(b[2]), float(b[3])))
            for c, b in zip(self.gt_classes, self.gt_boxes, strict=True)
        ]

    @property
    def visible_classes(self) -> np.ndarray:
        return self.gt_classes[list(self.visible_labels)]

    @property
    def visible_boxes(self) -> np.ndarray:
        return self.gt_boxes[list(self.visible_labels)].reshape(-1, 4)

    @property
    def is_fully_labeled(self) -> bool:
        return len(self.visible_labels) == len(self.gt_classes)

    def with_visible(self, visible: tuple[int, ...]) -> SceneSample:
        return replace(self, visible_labels=tuple(sorted(visible)))

    def fully_labeled(self) -> SceneSample:
        return self.with_visible(tuple(range(len(self.gt_classes))))


@dataclass(eq=False)
class DatasetSplit:
    """Disjoint train/val/test partitions."""

    train: list[SceneSample] = field(default_factory=list)
    val: list[SceneSample] = field(default_factory=list)
    test: list[SceneSample] = field(default_factory=list)
    fractions: tuple[float, float, float] = (0.7, 0.2, 0.1)

    def partition(self, name: str) -> list[SceneSample]:
        return getattr(self, str(name))

    def __len__(self) -> int:
        return len(self.train) + len(self.val) + len(self.test)


# -- Dataset statistics ------------------------------------------------------


class LabelingEffort(BaseModel):
    """Annotation time of a partial labeling vs labeling every instance."""

    seconds_per_box: float
    labeled_boxes: int
    total_boxes: int

    @property
    def partial_hours(self) -> float:
        return self.labeled_boxes * self.seconds_per_box / 3600.0

    @property
    def full_hours(self) -> float:
        return self.total_boxes * self.seconds_per_box / 3600.0

    @property
    def saved_hours(self) -> float:
        return self.full_hours - self.partial_hours


class PartitionStats(BaseModel):
    images: int = 0
    visible_per_class: list[int] = Field(default_factory=list)
    total_per_class: list[int] = Field(default_factory=list)


class DatasetStats(BaseModel):
    """Written to ``stats.json`` next to a generated dataset."""

    partitions: dict[str, PartitionStats] = Field(default_factory=dict)
    labeling: LabelingEffort | None = None
