"""End-to-end tests of the command line on a tiny dataset."""

from __future__ import annotations

import json
import sys
from collections.abc import Iterator
from pathlib import Path

import pytest
from click.testing import CliRunner, Result
from loguru import logger

from sparsedet.cli import main
from sparsedet.config import dump_config
from sparsedet.detector.checkpoint import save_checkpoint
from sparsedet.detector.network import GridDetector
from sparsedet.engine import seed_everything
from sparsedet.engine.trainer import load_metrics_log
from sparsedet.models.evaluation import EvalReport
from sparsedet.models.experiment import ExperimentConfig
from sparsedet.store.local import DatasetStore
from sparsedet.store.runs import RunDirectory


@pytest.fixture(autouse=True)
def _restore_logger() -> Iterator[None]:
    yield
    logger.remove()
    logger.add(sys.stderr)


@pytest.fixture
def config_file(tmp_path: Path, small_config: ExperimentConfig) -> Path:
    path = tmp_path / "small.toml"
    path.write_text(dump_config(small_config))
    return path


@pytest.fixture
def dataset(tmp_path: Path, config_file: Path) -> Path:
    out = tmp_path / "data"
    result = _run("--config", config_file, "--out", out, "generate")
    assert result.exit_code == 0, result.output
    return out


def _run(*args: object) -> Result:
    return CliRunner().invoke(main, [str(a) for a in args])


def _random_checkpoint(path: Path, config: ExperimentConfig, dataset_fingerprint: str) -> Path:
    seed_everything(config.train.seed)
    model = GridDetector(len(config.scene.catalog()), config.train.model, config.train.image_size)
    save_checkpoint(path, model, dataset_fingerprint=dataset_fingerprint)
    return path


def test_generate_is_reproducible(tmp_path: Path, config_file: Path, dataset: Path) -> None:
    first = DatasetStore(dataset).fingerprint()
    again = _run("--config", config_file, "--out", tmp_path / "again", "generate")

    assert again.exit_code == 0, again.output
    assert "fingerprint" in again.output
    assert DatasetStore(tmp_path / "again").fingerprint() == first
    assert DatasetStore(dataset).read_manifest().dataset_fingerprint == first


def test_generate_rejects_invalid_config_without_output(tmp_path: Path, config_file: Path) -> None:
    out = tmp_path / "data"
    result = _run("--config", config_file, "--out", out, "generate", "scene.num_images=-5")

    assert result.exit_code == 1
    assert "Error: invalid config" in result.output
    assert "scene.num_images" in result.output
    assert not out.exists()


def test_missing_config_file(tmp_path: Path) -> None:
    result = _run("--config", tmp_path / "nope.toml", "generate")
    assert result.exit_code == 1
    assert "file not found" in result.output


def test_train_without_dataset(tmp_path: Path, config_file: Path) -> None:
    result = _run("--config", config_file, "train", "--data", tmp_path / "missing")
    assert result.exit_code == 1
    assert "directory does not exist" in result.output


def test_eval_without_checkpoint(tmp_path: Path, dataset: Path) -> None:
    result = _run("eval", "--checkpoint", tmp_path / "missing.pt", "--data", dataset)
    assert result.exit_code == 1
    assert "checkpoint not found" in result.output


def test_eval_refuses_foreign_checkpoint(tmp_path: Path, small_config: ExperimentConfig, dataset: Path) -> None:
    ckpt = _random_checkpoint(tmp_path / "ckpt.pt", small_config, "0" * 64)

    out = tmp_path / "runs" / f"eval_{tmp_path.name}_ckpt_test"

    refused = _run("eval", "--checkpoint", ckpt, "--data", dataset)
    assert refused.exit_code == 1
    assert not out.exists()

    forced = _run("eval", "--checkpoint", ckpt, "--data", dataset, "--force")
    assert forced.exit_code == 0, forced.output
    assert (out / "report.json").is_file()


def test_random_init_scores_near_zero(tmp_path: Path, small_config: ExperimentConfig, dataset: Path) -> None:
    ckpt = _random_checkpoint(tmp_path / "ckpt.pt", small_config, DatasetStore(dataset).fingerprint())
    result = _run("--out", tmp_path / "eval", "eval", "--checkpoint", ckpt, "--data", dataset, "--split", "val")

    assert result.exit_code == 0, result.output
    report = EvalReport.model_validate_json((tmp_path / "eval" / "report.json").read_text())
    assert report.split == "val"
    assert report.map50 < 0.05


def _snapshot(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_train_eval_report(tmp_path: Path, config_file: Path, dataset: Path) -> None:
    trained = _run("--config", config_file, "train", "--data", dataset, "--name", "run", "train.epochs=1")
    assert trained.exit_code == 0, trained.output

    run = RunDirectory(tmp_path / "runs" / "run")
    for path in (run.config_path, run.manifest_path, run.log_csv, run.ckpt_final, run.eval_dir / "report.json"):
        assert path.is_file(), path
    manifest = run.read_manifest()
    assert manifest.command == "train"
    assert manifest.dataset_fingerprint == DatasetStore(dataset).fingerprint()
    assert manifest.finished_at is not None

    run_files, data_files = _snapshot(run.path), _snapshot(dataset)
    evaluated = _run("--config", config_file, "eval", "--checkpoint", run.ckpt_final, "--data", dataset)
    assert evaluated.exit_code == 0, evaluated.output
    assert _snapshot(run.path) == run_files
    assert _snapshot(dataset) == data_files

    eval_dir = tmp_path / "runs" / "eval_run_ckpt_final_test"
    assert json.loads((eval_dir / "report.json").read_text())["split"] == "test"

    (eval_dir / "pr_curves.png").unlink()
    rerendered = _run("report", eval_dir)
    assert rerendered.exit_code == 0, rerendered.output
    assert (eval_dir / "pr_curves.png").is_file()


def test_eval_on_val_matches_logged_final_metrics(
    tmp_path: Path,
    small_config: ExperimentConfig,
    config_file: Path,
    dataset: Path,
) -> None:
    trained = _run("--config", config_file, "train", "--data", dataset, "--name", "run", "train.epochs=2")
    assert trained.exit_code == 0, trained.output
    run = RunDirectory(tmp_path / "runs" / "run")

    out = tmp_path / "val"
    args = ("--config", config_file, "--out", out, "eval", "--checkpoint", run.ckpt_final, "--data", dataset)
    evaluated = _run(*args, "--split", "val")
    assert evaluated.exit_code == 0, evaluated.output

    report = EvalReport.model_validate_json((out / "report.json").read_text())
    logged = run.read_eval_report()
    assert logged.split == report.split == "val"
    assert report.map50 == logged.map50
    assert report.mean_recall == logged.mean_recall
    assert [m.ap for m in report.classes] == [m.ap for m in logged.classes]
    assert report.confusion == logged.confusion

    final_epoch = load_metrics_log(run.log_csv, len(small_config.scene.catalog())).epoch_rows()[-1]
    assert final_epoch["val_map50"] == f"{report.map50:.6f}"
    assert final_epoch["val_recall"] == f"{report.mean_recall:.6f}"


def test_report_of_unrelated_directory(tmp_path: Path) -> None:
    result = _run("report", tmp_path)
    assert result.exit_code == 1
    assert "neither comparison.json" in result.output


def test_compare_reports_failed_arms(
    tmp_path: Path,
    config_file: Path,
    dataset: Path,
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    def _explode(*args, **kwargs):
        msg = "out of memory"
        raise RuntimeError(msg)

    monkeypatch.setattr("sparsedet.engine.comparison.train", _explode)
    result = _run("--config", config_file, "--out", tmp_path / "cmp", "compare", "--data", dataset)

    assert result.exit_code == 2
    assert "2 of 2 runs failed" in result.output
    assert (tmp_path / "cmp" / "comparison.json").is_file()
