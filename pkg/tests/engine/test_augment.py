"""Unit tests for training-time augmentation."""

from __future__ import annotations

import numpy as np
import pytest

from sparsedet.engine.augment import adjust, augment, hflip, vflip
from sparsedet.models.scene import SceneConfig, SceneSample
from sparsedet.models.training import AugmentConfig
from sparsedet.synth.generator import generate_sample


@pytest.fixture
def sample(small_scene: SceneConfig) -> SceneSample:
    return generate_sample(small_scene, seed=2, index=0).with_visible((0,))


@pytest.mark.parametrize("flip", [hflip, vflip])
def test_flips_are_involutions(sample: SceneSample, flip) -> None:
    twice = flip(flip(sample))
    assert np.array_equal(twice.image, sample.image)
    assert np.allclose(twice.gt_boxes, sample.gt_boxes)
    assert twice.visible_labels == sample.visible_labels


def test_hflip_moves_boxes_with_pixels(sample: SceneSample) -> None:
    flipped = hflip(sample)
    size = sample.image.shape[1]
    assert np.allclose(flipped.gt_boxes[:, 0], 1.0 - sample.gt_boxes[:, 0])
    assert np.array_equal(flipped.gt_boxes[:, 1:], sample.gt_boxes[:, 1:])

    for (cx, cy, _, _), (fx, fy, _, _) in zip(sample.gt_boxes, flipped.gt_boxes, strict=True):
        col, row = int(cx * size), int(cy * size)
        fcol, frow = int(fx * size), int(fy * size)
        if col == size - 1 - fcol:
            assert np.array_equal(sample.image[row, col], flipped.image[frow, fcol])


def test_vflip_moves_boxes_with_pixels(sample: SceneSample) -> None:
    flipped = vflip(sample)
    assert np.allclose(flipped.gt_boxes[:, 1], 1.0 - sample.gt_boxes[:, 1])
    assert np.array_equal(flipped.image, sample.image[::-1])
    assert np.array_equal(flipped.visible_boxes, flipped.gt_boxes[[0]])


def test_adjust_identity_and_clipping() -> None:
    image = np.linspace(0, 1, 48, dtype=np.float32).reshape(4, 4, 3)
    assert np.array_equal(adjust(image, 0.0, 1.0), image)

    bright = adjust(image, 0.5, 1.5)
    assert bright.dtype == image.dtype
    assert bright.min() >= 0.0
    assert bright.max() <= 1.0


def test_disabled_returns_the_sample_untouched(sample: SceneSample) -> None:
    rng = np.random.default_rng(0)
    assert augment(sample, rng, AugmentConfig(enabled=False)) is sample
    assert rng.random() == np.random.default_rng(0).random()


def test_augment_is_pure_in_sample_and_rng(sample: SceneSample) -> None:
    original = sample.image.copy()
    a = augment(sample, np.random.default_rng(9), AugmentConfig())
    b = augment(sample, np.random.default_rng(9), AugmentConfig())

    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.gt_boxes, b.gt_boxes)
    assert np.array_equal(sample.image, original)
    assert a.image.min() >= 0.0
    assert a.image.max() <= 1.0


def test_random_stream_is_independent_of_probabilities(sample: SceneSample) -> None:
    never = AugmentConfig(hflip_p=0.0, vflip_p=0.0)
    always = AugmentConfig(hflip_p=1.0, vflip_p=1.0)
    rng_a, rng_b = np.random.default_rng(4), np.random.default_rng(4)
    augment(sample, rng_a, never)
    flipped = augment(sample, rng_b, always)

    assert rng_a.random() == rng_b.random()
    assert np.allclose(flipped.gt_boxes[:, :2], 1.0 - sample.gt_boxes[:, :2])
