"""Training configuration models.

Defaults follow the full-scale detector recipe where one exists (loss
weights, learning rate, batch size, augmentation set) and desk-scale values
otherwise (40 epochs at 256 px).
"""

from __future__ import annotations

from typing import Literal, Self

from pydantic import BaseModel, Field, model_validator


class LossWeights(BaseModel):
    """Weights of the composite detection loss."""

    lambda_ciou: float = Field(default=7.5, ge=0)
    lambda_dfl: float = Field(default=1.5, ge=0)
    lambda_bce: float = Field(default=0.5, ge=0)


class CfplConfig(BaseModel):
    """Constrained false positive masking of the classification loss."""

    enabled: bool = False
    whitelist: list[int] | None = Field(
        default=None,
        description="Class ids to mask.  Unset means the catalog's whitelisted (capped) classes.",
    )
    threshold_quantile: float = Field(
        default=0.0,
        ge=0.0,
        le=1.0,
        description="Quantile of ground-truth-area scores used as the class threshold (0 = minimum)",
    )
    no_positive_policy: Literal["disable_masking"] = "disable_masking"

    def resolve_whitelist(self, catalog_whitelist: set[int]) -> frozenset[int]:
        if not self.enabled:
            return frozenset()
        if self.whitelist is None:
            return frozenset(catalog_whitelist)
        return frozenset(self.whitelist)


class AugmentConfig(BaseModel):
    """Random flips plus brightness/contrast jitter."""

    enabled: bool = True
    hflip_p: float = Field(default=0.5, ge=0.0, le=1.0)
    vflip_p: float = Field(default=0.5, ge=0.0, le=1.0)
    brightness_delta: float = Field(default=0.2, ge=0.0)
    contrast_range: tuple[float, float] = (0.8, 1.25)

    @model_validator(mode="after")
    def _validate_contrast(self) -> Self:
        lo, hi = self.contrast_range
        if not 0 < lo <= hi:
            msg = f"contrast_range must satisfy 0 < low <= high, got {self.contrast_range}"
            raise ValueError(msg)
        return self


class ModelConfig(BaseModel):
    """Grid detector hyper-parameters."""

    width: int = Field(default=32, ge=8, description="Channels of the first backbone block")
    bins: int = Field(default=16, ge=2, description="Discrete bins per box side")
    stride: int = Field(default=8, description="Backbone output stride")

    @model_validator(mode="after")
    def _validate_stride(self) -> Self:
        if self.stride != 8:
            msg = f"the backbone downsamples exactly three times; stride must be 8, got {self.stride}"
            raise ValueError(msg)
        return self


class TrainConfig(BaseModel):
    """One training run."""

    epochs: int = Field(default=40, ge=1)
    batch_size: int = Field(default=16, ge=1)
    image_size: int = Field(default=256, gt=0)
    learning_rate: float = Field(default=3.13e-4, ge=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    betas: tuple[float, float] = (0.9, 0.999)
    lr_schedule: Literal["constant"] = "constant"
    weights: LossWeights = Field(default_factory=LossWeights)
    cfpl: CfplConfig = Field(default_factory=CfplConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    eval_every: int = Field(default=1, ge=1, description="Validate every N epochs (the last epoch always validates)")
    log_every: int = Field(default=1, ge=1, description="Emit a loss breakdown line every N steps")
    seed: int = 0

    @model_validator(mode="after")
    def _validate_grid(self) -> Self:
        if self.image_size % self.model.stride:
            msg = f"image_size {self.image_size} is not a multiple of stride {self.model.stride}"
            raise ValueError(msg)
        return self
