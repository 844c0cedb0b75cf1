"""Self-describing model checkpoints.

A checkpoint is a ``torch.save`` dict holding the state dict keyed by layer
name, the model hyper-parameters and the fingerprints of the data the model
was trained on.  It contains only tensors and plain Python values, so it
loads with ``weights_only=True``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import torch

from sparsedet.detector.network import GridDetector
from sparsedet.models.training import ModelConfig
from sparsedet.store.local import atomic_write

FORMAT_VERSION = 1


class CheckpointNotFoundError(LookupError):
    def __init__(self, path: Path) -> None:
        self.path = path
        super().__init__(f"checkpoint not found: {path}")


@dataclass
class Checkpoint:
    state_dict: dict[str, torch.Tensor]
    model: ModelConfig
    num_classes: int
    image_size: int
    scene_fingerprint: str | None = None
    catalog_fingerprint: str | None = None
    dataset_fingerprint: str | None = None
    config_json: str | None = None
    extra: dict[str, float | int | str] = field(default_factory=dict)

    def build_model(self) -> GridDetector:
        model = GridDetector(self.num_classes, self.model, self.image_size)
        model.load_state_dict(self.state_dict)
        model.eval()
        return model


def save_checkpoint(path: Path, model: GridDetector, **meta: object) -> None:
    """Serialize ``model`` plus metadata (fingerprints, config JSON, extras)."""
    payload = {
        "format_version": FORMAT_VERSION,
        "state_dict": {k: v.detach().cpu().clone() for k, v in model.state_dict().items()},
        "model": model.config.model_dump(),
        "num_classes": model.num_classes,
        "image_size": model.geometry.image_size,
        **meta,
    }
    buf = io.BytesIO()
    torch.save(payload, buf)
    atomic_write(path, buf.getvalue())


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointNotFoundError(path)
    payload = torch.load(path, map_location="cpu", weights_only=True)
    return Checkpoint(
        state_dict=payload["state_dict"],
        model=ModelConfig.model_validate(payload["model"]),
        num_classes=int(payload["num_classes"]),
        image_size=int(payload["image_size"]),
        scene_fingerprint=payload.get("scene_fingerprint"),
        catalog_fingerprint=payload.get("catalog_fingerprint"),
        dataset_fingerprint=payload.get("dataset_fingerprint"),
        config_json=payload.get("config_json"),
        extra=payload.get("extra", {}),
    )
