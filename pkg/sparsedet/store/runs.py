"""Run and comparison directories.

Layout::

    runs/<name>/config.toml
    runs/<name>/manifest.json
    runs/<name>/log.csv
    runs/<name>/train.log
    runs/<name>/ckpt_final.pt
    runs/<name>/ckpt_best.pt
    runs/<name>/eval/

A comparison directory holds the same ``config.toml`` / ``manifest.json``
pair plus one run directory per arm and seed (``baseline_s<seed>``,
``cfpl_s<seed>``) and the aggregate ``comparison.json``.
"""

from __future__ import annotations

from datetime import UTC, datetime
from pathlib import Path

from sparsedet import __version__
from sparsedet.config import dump_config
from sparsedet.models.enums import RunKind
from sparsedet.models.evaluation import EvalReport
from sparsedet.models.experiment import ComparisonReport, ExperimentConfig, RunManifest
from sparsedet.store.local import atomic_write


class RunDirectory:
    """Paths and small-file IO of one output directory."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    # -- Paths -------------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.path / "config.toml"

    @property
    def manifest_path(self) -> Path:
        return self.path / "manifest.json"

    @property
    def log_csv(self) -> Path:
        return self.path / "log.csv"

    @property
    def train_log(self) -> Path:
        return self.path / "train.log"

    @property
    def ckpt_final(self) -> Path:
        return self.path / "ckpt_final.pt"

    @property
    def ckpt_best(self) -> Path:
        return self.path / "ckpt_best.pt"

    @property
    def eval_dir(self) -> Path:
        return self.path / "eval"

    @property
    def comparison_json(self) -> Path:
        return self.path / "comparison.json"

    def arm(self, kind: RunKind, seed: int) -> RunDirectory:
        return RunDirectory(self.path / f"{kind.value}_s{seed}")

    # -- Files -------------------------------------------------------------------

    def prepare(self, config: ExperimentConfig) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        atomic_write(self.config_path, dump_config(config))

    def write_manifest(self, manifest: RunManifest) -> None:
        atomic_write(self.manifest_path, manifest.model_dump_json(indent=2))

    def read_manifest(self) -> RunManifest:
        return RunManifest.model_validate_json(self.manifest_path.read_text(encoding="utf-8"))

    def write_comparison(self, report: ComparisonReport) -> None:
        atomic_write(self.comparison_json, report.model_dump_json(indent=2))

    def read_comparison(self) -> ComparisonReport:
        return ComparisonReport.model_validate_json(self.comparison_json.read_text(encoding="utf-8"))

    def read_eval_report(self) -> EvalReport:
        return EvalReport.model_validate_json((self.eval_dir / "report.json").read_text(encoding="utf-8"))


def new_manifest(
    command: str,
    *,
    config_path: str | Path | None = None,
    seeds: list[int] | None = None,
    dataset_fingerprint: str | None = None,
    catalog_fingerprint: str | None = None,
) -> RunManifest:
    """Manifest stamped with the current time and tool version."""
    return RunManifest(
        command=command,
        config_path=str(config_path) if config_path is not None else None,
        dataset_fingerprint=dataset_fingerprint,
        catalog_fingerprint=catalog_fingerprint,
        seeds=seeds or [],
        tool_version=__version__,
        started_at=datetime.now(UTC),
    )


def finish_manifest(manifest: RunManifest) -> RunManifest:
    return manifest.model_copy(update={"finished_at": datetime.now(UTC)})
