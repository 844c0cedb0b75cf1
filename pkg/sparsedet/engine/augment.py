"""Training-time augmentation: joint flips plus brightness/contrast jitter.

Every call draws exactly four numbers from ``rng`` in a fixed order
(hflip, vflip, brightness, contrast) whether or not they are used, so the
random stream stays aligned across configurations.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from sparsedet.models.scene import SceneSample
from sparsedet.models.training import AugmentConfig


def hflip(sample: SceneSample) -> SceneSample:
    boxes = sample.gt_boxes.copy()
    boxes[:, 0] = 1.0 - boxes[:, 0]
    return replace(sample, image=np.ascontiguousarray(sample.image[:, ::-1]), gt_boxes=boxes)


def vflip(sample: SceneSample) -> SceneSample:
    boxes = sample.gt_boxes.copy()
    boxes[:, 1] = 1.0 - boxes[:, 1]
    return replace(sample, image=np.ascontiguousarray(sample.image[::-1]), gt_boxes=boxes)


def adjust(image: np.ndarray, brightness: float, contrast: float) -> np.ndarray:
    """``contrast * x + (1 - contrast) * mean + brightness``, clipped to [0, 1]."""
    mean = image.mean(dtype=np.float64)
    out = contrast * image + (1.0 - contrast) * mean + brightness
    return np.clip(out, 0.0, 1.0).astype(image.dtype)


def augment(sample: SceneSample, rng: np.random.Generator, cfg: AugmentConfig) -> SceneSample:
    """Randomly flip (image and every box together) and jitter pixels."""
    if not cfg.enabled:
        return sample
    u_h, u_v = rng.random(), rng.random()
    brightness = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta)
    contrast = rng.uniform(*cfg.contrast_range)

    if u_h < cfg.hflip_p:
        sample = hflip(sample)
    if u_v < cfg.vflip_p:
        sample = vflip(sample)
    return replace(sample, image=adjust(sample.image, brightness, contrast))
