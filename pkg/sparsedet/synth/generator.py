"""Deterministic synthetic dense-scene generator.

Each image is a wooden board with horizontal cavity rows; brood cells are
rounded rectangles packed into the rows.  Every class has its own base color
and texture family, perturbed per instance by bounded noise, so that a class
is always visually separable from the others.

Randomness of sample ``i`` comes only from ``numpy.random.default_rng([seed, i])``,
so serial and parallel generation give identical datasets.
"""

from __future__ import annotations

import numpy as np
from loguru import logger
from PIL import Image, ImageDraw

from sparsedet.models.enums import Texture
from sparsedet.models.scene import SceneConfig, SceneSample

_BOARD_COLOR = np.array([0.62, 0.48, 0.32], dtype=np.float32)
_CAVITY_COLOR = np.array([0.30, 0.22, 0.15], dtype=np.float32)
_TEXTURE_PERIOD = 5


class PackingError(ValueError):
    """The requested cell density cannot satisfy the packing constraint."""

    def __init__(self, detail: str) -> None:
        super().__init__(f"cannot pack cells: {detail}")


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def generate_dataset(config: SceneConfig, seed: int) -> list[SceneSample]:
    """Generate ``config.num_images`` fully labeled samples.

    Raises ``PackingError`` if a cell cannot be placed within
    ``config.placement_retries`` attempts.
    """
    check_capacity(config)
    samples = [generate_sample(config, seed, index) for index in range(config.num_images)]
    logger.info(
        "Generated {} scenes ({} cells) with seed {}",
        len(samples),
        sum(len(s.gt_classes) for s in samples),
        seed,
    )
    return samples


def generate_sample(config: SceneConfig, seed: int, index: int) -> SceneSample:
    """Generate the ``index``-th sample of the dataset seeded by ``seed``."""
    rng = np.random.default_rng([seed, index])
    lo, hi = config.cells_per_image
    n_cells = int(rng.integers(lo, hi + 1))

    boxes_px = _place_cells(config, rng, n_cells, index)
    classes = rng.choice(config.num_classes, size=len(boxes_px), p=config.class_weights).astype(np.int64)
    image = _render(config, rng, boxes_px, classes)

    size = float(config.image_size)
    if boxes_px:
        xyxy = np.asarray(boxes_px, dtype=np.float64)
        gt_boxes = np.stack(
            [
                (xyxy[:, 0] + xyxy[:, 2]) / 2 / size,
                (xyxy[:, 1] + xyxy[:, 3]) / 2 / size,
                (xyxy[:, 2] - xyxy[:, 0]) / size,
                (xyxy[:, 3] - xyxy[:, 1]) / size,
            ],
            axis=1,
        )
    else:
        gt_boxes = np.zeros((0, 4), dtype=np.float64)

    return SceneSample(
        image=image,
        gt_classes=classes,
        gt_boxes=gt_boxes,
        visible_labels=tuple(range(len(classes))),
        seed=seed,
        index=index,
    )


def check_capacity(config: SceneConfig) -> None:
    """Reject configs whose largest cell count cannot fit even edge to edge."""
    min_width = max(2, round(config.cell_width[0] * config.image_size))
    capacity = config.cavity_rows * (config.image_size // min_width)
    if config.cells_per_image[1] > capacity:
        msg = f"{config.cells_per_image[1]} cells requested but at most {capacity} fit in {config.cavity_rows} rows"
        raise PackingError(msg)


def pairwise_iou(boxes: np.ndarray) -> np.ndarray:
    """IoU matrix of ``(n, 4)`` corner boxes."""
    x1 = np.maximum(boxes[:, None, 0], boxes[None, :, 0])
    y1 = np.maximum(boxes[:, None, 1], boxes[None, :, 1])
    x2 = np.minimum(boxes[:, None, 2], boxes[None, :, 2])
    y2 = np.minimum(boxes[:, None, 3], boxes[None, :, 3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    area = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    union = area[:, None] + area[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


# ---------------------------------------------------------------------------
# Layout
# ---------------------------------------------------------------------------


def _place_cells(config: SceneConfig, rng: np.random.Generator, n_cells: int, index: int) -> list[tuple[int, ...]]:
    """Rejection-sample integer pixel boxes row by row."""
    size = config.image_size
    row_h = size / config.cavity_rows
    placed: list[tuple[int, ...]] = []
    arr = np.zeros((0, 4), dtype=np.float64)

    for k in range(n_cells):
        for _ in range(config.placement_retries):
            row = int(rng.integers(config.cavity_rows))
            w = max(2, round(size * rng.uniform(*config.cell_width)))
            h = max(2, round(row_h * rng.uniform(*config.cell_fill)))
            x1 = int(rng.integers(0, size - w + 1))
            y_top = round(row * row_h)
            y1 = y_top + int(rng.integers(0, max(1, round(row_h) - h + 1)))
            y1 = min(y1, size - h)
            cand = (x1, y1, x1 + w, y1 + h)
            if len(placed) == 0 or _max_iou(arr, np.asarray(cand, dtype=np.float64)) < config.packing_iou:
                placed.append(cand)
                arr = np.vstack([arr, np.asarray(cand, dtype=np.float64)])
                break
        else:
            msg = f"sample {index}: cell {k + 1}/{n_cells} not placed after {config.placement_retries} retries"
            raise PackingError(msg)
    return placed


def _max_iou(boxes: np.ndarray, cand: np.ndarray) -> float:
    x1 = np.maximum(boxes[:, 0], cand[0])
    y1 = np.maximum(boxes[:, 1], cand[1])
    x2 = np.minimum(boxes[:, 2], cand[2])
    y2 = np.minimum(boxes[:, 3], cand[3])
    inter = np.clip(x2 - x1, 0, None) * np.clip(y2 - y1, 0, None)
    area = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    cand_area = (cand[2] - cand[0]) * (cand[3] - cand[1])
    return float((inter / (area + cand_area - inter)).max())


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _render(
    config: SceneConfig,
    rng: np.random.Generator,
    boxes_px: list[tuple[int, ...]],
    classes: np.ndarray,
) -> np.ndarray:
    size = config.image_size
    image = _board(config, rng)

    for (x1, y1, x2, y2), cls in zip(boxes_px, classes, strict=True):
        appearance = config.classes[int(cls)]
        w, h = x2 - x1, y2 - y1
        color = np.clip(
            np.asarray(appearance.color, dtype=np.float32)
            + rng.uniform(-config.color_jitter, config.color_jitter, size=3).astype(np.float32),
            0.0,
            1.0,
        )
        phase = rng.integers(0, _TEXTURE_PERIOD, size=2)
        pattern = _texture(appearance.texture, w, h, phase)
        mask = _rounded_mask(w, h)
        patch = image[y1:y2, x1:x2]
        patch[mask] = (color[None, None, :] * pattern[..., None])[mask]

    noise = rng.normal(0.0, config.pixel_noise, size=(size, size, 3)).astype(np.float32)
    image = np.clip(image + noise, 0.0, 1.0)
    # Quantize to 8-bit levels so PNG storage round-trips exactly.
    return (np.round(image * 255.0) / 255.0).astype(np.float32)


def _board(config: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    size = config.image_size
    row_h = size / config.cavity_rows
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)

    freq = rng.uniform(0.04, 0.08)
    grain = 0.05 * np.sin(freq * xx + 0.3 * np.sin(0.05 * yy) + rng.uniform(0, 2 * np.pi))
    image = np.broadcast_to(_BOARD_COLOR, (size, size, 3)) + grain[..., None]

    in_row = (yy % row_h) / row_h
    cavity = (in_row > 0.04) & (in_row < 0.96)
    image = np.where(cavity[..., None], _CAVITY_COLOR + 0.5 * grain[..., None], image)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def _rounded_mask(w: int, h: int) -> np.ndarray:
    mask = Image.new("L", (w, h), 0)
    ImageDraw.Draw(mask).rounded_rectangle((0, 0, w - 1, h - 1), radius=max(1, int(min(w, h) * 0.3)), fill=255)
    return np.asarray(mask) > 0


def _texture(texture: Texture, w: int, h: int, phase: np.ndarray) -> np.ndarray:
    """Brightness modulation in (0, 1] for a ``h x w`` cell."""
    p = _TEXTURE_PERIOD
    yy, xx = np.mgrid[0:h, 0:w]
    xx = xx + int(phase[0])
    yy = yy + int(phase[1])
    match texture:
        case Texture.SOLID:
            pattern = np.ones((h, w))
        case Texture.HSTRIPES:
            pattern = np.where((yy // p) % 2 == 0, 1.0, 0.65)
        case Texture.VSTRIPES:
            pattern = np.where((xx // p) % 2 == 0, 1.0, 0.65)
        case Texture.DOTS:
            d2 = (xx % p - p / 2) ** 2 + (yy % p - p / 2) ** 2
            pattern = np.where(d2 < (p / 3) ** 2, 0.55, 1.0)
        case Texture.CHECKER:
            pattern = np.where((xx // p + yy // p) % 2 == 0, 1.0, 0.6)
        case Texture.RING:
            cy, cx = (h - 1) / 2, (w - 1) / 2
            r = np.sqrt(((yy - int(phase[1]) - cy) / max(cy, 1)) ** 2 + ((xx - int(phase[0]) - cx) / max(cx, 1)) ** 2)
            pattern = np.where((r > 0.35) & (r < 0.7), 0.5, 1.0)
    return pattern.astype(np.float32)
