"""Evaluation data models: detections, ground truth and the report."""

from __future__ import annotations

from pydantic import BaseModel, Field

from sparsedet.models.enums import ClassGroup, MatchingRule, SplitName


class Detection(BaseModel):
    """A post-processed prediction in normalized corner form."""

    image_id: int = 0
    box: tuple[float, float, float, float]
    class_id: int = Field(ge=0)
    confidence: float = Field(ge=0.0, le=1.0)

    @property
    def sort_key(self) -> tuple:
        """Descending confidence, then class id, then box coordinates."""
        return (-self.confidence, self.class_id, *self.box)


class GroundTruth(BaseModel):
    """An oracle box in normalized corner form."""

    image_id: int = 0
    box: tuple[float, float, float, float]
    class_id: int = Field(ge=0)


class EvalConfig(BaseModel):
    """Post-processing and matching parameters."""

    conf_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    iou_match: float = Field(default=0.5, gt=0.0, le=1.0)
    nms_iou: float = Field(default=0.6, gt=0.0, lt=1.0)
    score_floor: float = Field(default=0.001, ge=0.0, le=1.0)
    max_candidates: int = Field(default=3000, ge=1, description="Per-image candidates kept before NMS")
    max_det: int = Field(default=300, ge=1, description="Per-image detections kept after NMS")
    matching: MatchingRule = MatchingRule.IOU
    split: SplitName = SplitName.TEST


# -- Report ------------------------------------------------------------------


class PRCurve(BaseModel):
    """Precision/recall at every confidence cutoff, in descending confidence order."""

    precision: list[float] = Field(default_factory=list)
    recall: list[float] = Field(default_factory=list)
    confidence: list[float] = Field(default_factory=list)


class ClassMetrics(BaseModel):
    class_id: int
    name: str
    group: ClassGroup
    num_gt: int = 0
    ap: float | None = Field(default=None, description="Absent when the class has no ground truth")
    recall: float | None = None
    background_rate: float | None = Field(default=None, description="Share of GT instances left unmatched")
    other_class_rate: float | None = Field(default=None, description="Share of GT instances matched to another class")
    pr_curve: PRCurve = Field(default_factory=PRCurve)


class GroupMetrics(BaseModel):
    group: ClassGroup
    class_ids: list[int] = Field(default_factory=list)
    ap: float
    recall: float
    background_rate: float
    pr_recall: list[float] = Field(default_factory=list)
    pr_precision: list[float] = Field(default_factory=list)


class EvalReport(BaseModel):
    """Detection metrics against the oracle ground truth of one split."""

    split: str = SplitName.TEST.value
    num_images: int = 0
    conf_threshold: float = 0.5
    iou_match: float = 0.5
    classes: list[ClassMetrics] = Field(default_factory=list)
    confusion: list[list[int]] = Field(default_factory=list, description="(N_c+1)^2, rows GT, background last")
    groups: dict[str, GroupMetrics] = Field(default_factory=dict)

    @property
    def map50(self) -> float:
        """Mean AP@0.5 over classes with ground truth (0 when none)."""
        aps = [c.ap for c in self.classes if c.ap is not None]
        return sum(aps) / len(aps) if aps else 0.0

    @property
    def mean_recall(self) -> float:
        rs = [c.recall for c in self.classes if c.recall is not None]
        return sum(rs) / len(rs) if rs else 0.0
