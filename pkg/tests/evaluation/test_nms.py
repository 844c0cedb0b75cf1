"""Unit tests for class-wise NMS."""

from __future__ import annotations

import numpy as np
import pytest

from sparsedet.evaluation import nms
from sparsedet.models.evaluation import Detection


def _det(box, conf: float, cls: int = 0, image: int = 0) -> Detection:
    return Detection(image_id=image, box=tuple(box), class_id=cls, confidence=conf)


def test_overlapping_same_class_is_suppressed() -> None:
    dets = [_det((0, 0, 0.5, 0.5), 0.9), _det((0.02, 0, 0.52, 0.5), 0.8), _det((0.6, 0.6, 0.9, 0.9), 0.7)]
    kept = nms(dets, 0.6)
    assert [d.confidence for d in kept] == [0.9, 0.7]


def test_other_classes_and_images_are_untouched() -> None:
    box = (0, 0, 0.5, 0.5)
    dets = [_det(box, 0.9), _det(box, 0.8, cls=1), _det(box, 0.7, image=1)]
    assert len(nms(dets, 0.6)) == 3


def test_threshold_is_strict() -> None:
    # IoU exactly 0.5
    dets = [_det((0, 0, 1, 1), 0.9), _det((0, 0, 1, 0.5), 0.8)]
    assert len(nms(dets, 0.5)) == 2
    assert len(nms(dets, 0.49)) == 1


def test_ties_break_on_box_coordinates() -> None:
    a = _det((0.1, 0.1, 0.5, 0.5), 0.8)
    b = _det((0.12, 0.1, 0.52, 0.5), 0.8)
    assert nms([a, b], 0.6) == [a]
    assert nms([b, a], 0.6) == [a]


def test_invalid_threshold() -> None:
    with pytest.raises(ValueError, match="iou_threshold"):
        nms([], 1.0)


def test_nms_is_idempotent() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        dets = []
        for _ in range(int(rng.integers(0, 25))):
            xy = rng.uniform(0, 0.7, size=2)
            dets.append(
                _det(
                    (*xy, *(xy + rng.uniform(0.05, 0.3, size=2))),
                    float(rng.choice([0.3, 0.5, 0.7, rng.random()])),
                    cls=int(rng.integers(3)),
                    image=int(rng.integers(2)),
                )
            )
        once = nms(dets, 0.5)
        assert nms(once, 0.5) == once
        assert nms(list(reversed(dets)), 0.5) == once
