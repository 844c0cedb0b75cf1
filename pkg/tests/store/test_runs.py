"""Unit tests for run directories and manifests."""

from __future__ import annotations

from pathlib import Path

from sparsedet import __version__
from sparsedet.config import load_config
from sparsedet.models.enums import RunKind
from sparsedet.models.experiment import ComparisonReport, ExperimentConfig, RunRecord
from sparsedet.models.scene import LabelCapConfig
from sparsedet.store.runs import RunDirectory, finish_manifest, new_manifest


def test_arm_directories(tmp_path: Path) -> None:
    run = RunDirectory(tmp_path / "cmp")
    assert run.arm(RunKind.BASELINE, 3).path == tmp_path / "cmp" / "baseline_s3"
    assert run.arm(RunKind.CFPL, 0).path == tmp_path / "cmp" / "cfpl_s0"


def test_prepare_writes_reloadable_config(tmp_path: Path, small_config: ExperimentConfig) -> None:
    config = small_config.model_copy(update={"label_cap": LabelCapConfig(cap=None)})
    run = RunDirectory(tmp_path / "run")
    run.prepare(config)

    reloaded = load_config(run.config_path)
    assert reloaded == config
    assert reloaded.label_cap.cap is None


def test_manifest_round_trip(tmp_path: Path) -> None:
    run = RunDirectory(tmp_path / "run")
    manifest = new_manifest("train", config_path="exp.toml", seeds=[4], dataset_fingerprint="abc")
    assert manifest.tool_version == __version__
    assert manifest.finished_at is None

    run.write_manifest(finish_manifest(manifest))
    saved = run.read_manifest()
    assert saved.command == "train"
    assert saved.config_path == "exp.toml"
    assert saved.seeds == [4]
    assert saved.dataset_fingerprint == "abc"
    assert saved.finished_at is not None
    assert saved.finished_at >= saved.started_at


def test_comparison_round_trip(tmp_path: Path) -> None:
    run = RunDirectory(tmp_path / "cmp")
    report = ComparisonReport(
        seeds=[0],
        runs=[RunRecord(kind=RunKind.CFPL, seed=0, error="RuntimeError: boom")],
    )
    run.write_comparison(report)
    assert run.read_comparison() == report
