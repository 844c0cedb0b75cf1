"""Local filesystem dataset store.

Layout of a dataset directory::

    {root}/catalog.txt
    {root}/config.toml
    {root}/manifest.json
    {root}/stats.json
    {root}/{train,val,test}/images/<stem>.png
    {root}/{train,val,test}/labels/<stem>.txt     visible labels
    {root}/{train,val,test}/labels/<stem>.full    oracle labels

Writes are atomic: single files go to a temporary file in the same
directory and are renamed over the target; a whole dataset is built in a
temporary sibling directory and renamed into place, so a failed command
leaves no partial output.
"""

from __future__ import annotations

import contextlib
import hashlib
import io
import json
import os
import shutil
import tempfile
from collections.abc import Iterable
from pathlib import Path

import numpy as np
from loguru import logger
from PIL import Image

from sparsedet.models.catalog import ClassCatalog, ClassSpec
from sparsedet.models.enums import ClassGroup, SplitName, StatusCode
from sparsedet.models.experiment import RunManifest
from sparsedet.models.scene import DatasetSplit, DatasetStats, SceneSample

MANIFEST = "manifest.json"
CATALOG = "catalog.txt"
CONFIG = "config.toml"
STATS = "stats.json"

_CATALOG_HEADER = ("id", "name", "status_code", "group", "whitelisted")


class DatasetNotFoundError(LookupError):
    """No dataset (or an incomplete one) at the given path."""

    def __init__(self, path: Path, detail: str = "not a dataset directory") -> None:
        self.path = path
        super().__init__(f"{path}: {detail}")


class DatasetStore:
    """Reads and writes one dataset directory."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    # -- Write -----------------------------------------------------------------

    def write(
        self,
        split: DatasetSplit,
        catalog: ClassCatalog,
        *,
        config_toml: str,
        stats: DatasetStats,
        manifest: RunManifest,
    ) -> str:
        """Write the whole dataset and return its content fingerprint.

        An existing directory at ``root`` is replaced only after the new one is
        complete.
        """
        self.root.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(dir=self.root.parent, prefix=f".{self.root.name}.", suffix=".tmp"))
        try:
            atomic_write(staging / CATALOG, format_catalog(catalog))
            atomic_write(staging / CONFIG, config_toml)
            atomic_write(staging / STATS, stats.model_dump_json(indent=2))
            for name in SplitName:
                for sample in split.partition(name):
                    _write_sample(staging / name.value, sample)

            fingerprint = dataset_fingerprint(staging)
            manifest = manifest.model_copy(
                update={"dataset_fingerprint": fingerprint, "catalog_fingerprint": catalog.fingerprint}
            )
            atomic_write(staging / MANIFEST, manifest.model_dump_json(indent=2))
            _replace_dir(staging, self.root)
        except BaseException:
            shutil.rmtree(staging, ignore_errors=True)
            raise

        logger.info("Wrote dataset {} ({} images, fingerprint {})", self.root, len(split), fingerprint[:12])
        return fingerprint

    # -- Read ------------------------------------------------------------------

    def exists(self) -> bool:
        return (self.root / CATALOG).is_file() and (self.root / MANIFEST).is_file()

    def load(self) -> tuple[DatasetSplit, ClassCatalog]:
        """Load all partitions and the catalog.

        Raises ``DatasetNotFoundError`` if ``root`` is not a dataset directory.
        """
        if not self.root.is_dir():
            raise DatasetNotFoundError(self.root, "directory does not exist")
        if not self.exists():
            raise DatasetNotFoundError(self.root)

        catalog = parse_catalog(_read_file(self.root / CATALOG))
        manifest = self.read_manifest()
        seed = manifest.seeds[0] if manifest.seeds else 0
        partitions = {name: self._load_partition(name, seed) for name in SplitName}
        total = sum(len(p) for p in partitions.values())
        fractions = tuple(len(partitions[n]) / total if total else 0.0 for n in SplitName)
        split = DatasetSplit(
            train=partitions[SplitName.TRAIN],
            val=partitions[SplitName.VAL],
            test=partitions[SplitName.TEST],
            fractions=fractions,  # type: ignore[arg-type]
        )
        return split, catalog

    def read_manifest(self) -> RunManifest:
        path = self.root / MANIFEST
        if not path.is_file():
            raise DatasetNotFoundError(self.root, f"missing {MANIFEST}")
        return RunManifest.model_validate_json(_read_file(path))

    def read_stats(self) -> DatasetStats:
        return DatasetStats.model_validate_json(_read_file(self.root / STATS))

    def fingerprint(self) -> str:
        return dataset_fingerprint(self.root)

    def _load_partition(self, name: SplitName, seed: int) -> list[SceneSample]:
        image_dir = self.root / name.value / "images"
        label_dir = self.root / name.value / "labels"
        if not image_dir.is_dir():
            return []
        samples = []
        for image_path in sorted(image_dir.glob("*.png")):
            stem = image_path.stem
            full_lines = _read_lines(label_dir / f"{stem}.full")
            visible_lines = _read_lines(label_dir / f"{stem}.txt")
            classes, boxes = parse_labels(full_lines)
            samples.append(
                SceneSample(
                    image=read_image(image_path),
                    gt_classes=classes,
                    gt_boxes=boxes,
                    visible_labels=match_visible(full_lines, visible_lines),
                    seed=seed,
                    index=int(stem.rsplit("_", 1)[-1]),
                )
            )
        return samples


# -- Fingerprint ---------------------------------------------------------------


def dataset_fingerprint(root: Path) -> str:
    """SHA-256 over relative paths and bytes of every file except the manifest."""
    digest = hashlib.sha256()
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.name != MANIFEST)
    for path in files:
        digest.update(path.relative_to(root).as_posix().encode())
        digest.update(b"\0")
        digest.update(path.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


# -- Formats ---------------------------------------------------------------------


def format_labels(classes: Iterable[int], boxes: np.ndarray) -> str:
    """``<class_id> <cx> <cy> <w> <h>`` per line, 6 decimals."""
    lines = [
        f"{int(c)} {b[0]:.6f} {b[1]:.6f} {b[2]:.6f} {b[3]:.6f}"
        for c, b in zip(classes, np.asarray(boxes).reshape(-1, 4), strict=True)
    ]
    return "".join(line + "\n" for line in lines)


def parse_labels(lines: list[str]) -> tuple[np.ndarray, np.ndarray]:
    classes = np.array([int(line.split()[0]) for line in lines], dtype=np.int64)
    boxes = np.array([[float(v) for v in line.split()[1:5]] for line in lines], dtype=np.float64).reshape(-1, 4)
    return classes, boxes


def match_visible(full_lines: list[str], visible_lines: list[str]) -> tuple[int, ...]:
    """Indices of ``full_lines`` that appear among ``visible_lines`` (as a multiset)."""
    remaining: dict[str, int] = {}
    for line in visible_lines:
        remaining[line] = remaining.get(line, 0) + 1
    picked = []
    for idx, line in enumerate(full_lines):
        if remaining.get(line, 0) > 0:
            remaining[line] -= 1
            picked.append(idx)
    return tuple(picked)


def format_catalog(catalog: ClassCatalog) -> str:
    rows = ["\t".join(_CATALOG_HEADER)]
    rows.extend(
        f"{c.id}\t{c.name}\t{c.status_code.value}\t{c.group.value}\t{str(c.whitelisted).lower()}"
        for c in catalog.classes
    )
    return "\n".join(rows) + "\n"


def parse_catalog(text: str) -> ClassCatalog:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or tuple(lines[0].split("\t")) != _CATALOG_HEADER:
        msg = f"catalog header must be the tab-separated columns {_CATALOG_HEADER}"
        raise ValueError(msg)
    classes = []
    for line in lines[1:]:
        cid, name, status, group, white = line.split("\t")
        classes.append(
            ClassSpec(
                id=int(cid),
                name=name,
                status_code=StatusCode(status),
                group=ClassGroup(group),
                whitelisted=white == "true",
            )
        )
    return ClassCatalog(classes=classes)


def encode_png(image: np.ndarray) -> bytes:
    pixels = np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    return buf.getvalue()


def read_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


# -- Sync helpers ------------------------------------------------------------------


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write data atomically: temp file + rename.

    Ensures readers never see a partially-written file.  The temp file is
    created in the same directory so ``os.rename`` is atomic on POSIX.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        if isinstance(data, bytes):
            with os.fdopen(fd, "wb") as f:
                f.write(data)
        else:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(data)
        os.rename(tmp_path, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp_path)
        raise


def write_json(path: Path, payload: object) -> None:
    atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _write_sample(part_dir: Path, sample: SceneSample) -> None:
    atomic_write(part_dir / "images" / f"{sample.stem}.png", encode_png(sample.image))
    atomic_write(
        part_dir / "labels" / f"{sample.stem}.txt",
        format_labels(sample.visible_classes, sample.visible_boxes),
    )
    atomic_write(part_dir / "labels" / f"{sample.stem}.full", format_labels(sample.gt_classes, sample.gt_boxes))


def _replace_dir(staging: Path, target: Path) -> None:
    if target.exists():
        retired = target.with_name(f".{target.name}.old")
        _rmtree(retired)
        os.rename(target, retired)
        os.rename(staging, target)
        _rmtree(retired)
    else:
        os.rename(staging, target)


def _read_file(path: Path) -> str:
    """Read file contents.  Raises ``FileNotFoundError`` if missing."""
    return path.read_text(encoding="utf-8")


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        return []
    return [line for line in _read_file(path).splitlines() if line.strip()]


def _rmtree(path: Path) -> None:
    """Remove directory tree.  No-op if path doesn't exist."""
    if path.exists():
        shutil.rmtree(path)
