"""Tests for report files, plots and the comparison table."""

from __future__ import annotations

from pathlib import Path

import pytest

from sparsedet.engine.comparison import aggregate
from sparsedet.evaluation import build_report
from sparsedet.evaluation.artifacts import confusion_csv, pr_curve_csv, write_report
from sparsedet.evaluation.render import format_delta, format_summary, render_comparison
from sparsedet.models.catalog import ClassCatalog, ClassSpec
from sparsedet.models.enums import RunKind, StatusCode
from sparsedet.models.evaluation import Detection, EvalConfig, EvalReport, GroundTruth
from sparsedet.models.experiment import MetricSummary, RunRecord

CATALOG = ClassCatalog(
    classes=[
        ClassSpec(id=0, name="Osmia - Larva", status_code=StatusCode.LARVA),
        ClassSpec(id=1, name="Hylaeus - Dead", status_code=StatusCode.DEAD),
    ]
).with_groups({0})

A = (0.1, 0.1, 0.3, 0.3)
B = (0.5, 0.5, 0.7, 0.7)


def _report(hit_b: bool) -> EvalReport:
    gts = [GroundTruth(box=A, class_id=0), GroundTruth(box=B, class_id=0), GroundTruth(box=A, class_id=1)]
    dets = [Detection(box=A, class_id=0, confidence=0.9), Detection(box=A, class_id=1, confidence=0.8)]
    if hit_b:
        dets.append(Detection(box=B, class_id=0, confidence=0.7))
    return build_report(dets, gts, CATALOG, EvalConfig(), num_images=1)


def test_write_report_files(tmp_path: Path) -> None:
    report = _report(hit_b=False)
    write_report(report, tmp_path / "eval")

    out = tmp_path / "eval"
    assert EvalReport.model_validate_json((out / "report.json").read_text()) == report
    for name in ("confusion.csv", "pr_curves/0.csv", "pr_curves/1.csv", "pr_curves.png", "ap_recall_bars.png"):
        assert (out / name).is_file(), name
    assert (out / "confusion.png").stat().st_size > 0


def test_confusion_csv() -> None:
    lines = confusion_csv(_report(hit_b=False)).splitlines()
    assert lines[0] == "gt\\pred,Osmia - Larva,Hylaeus - Dead,background"
    assert lines[1] == "Osmia - Larva,1,0,1"
    assert lines[3] == "background,0,0,0"


def test_pr_curve_csv() -> None:
    lines = pr_curve_csv(_report(hit_b=True), 0).splitlines()
    assert lines == [
        "confidence,precision,recall",
        "0.900000,1.000000,0.500000",
        "0.700000,1.000000,1.000000",
    ]


def test_format_helpers() -> None:
    assert format_summary(None) == "n/a"
    assert format_summary(MetricSummary(values=[0.5], mean=0.5)) == "50.00"
    assert format_summary(MetricSummary(values=[0.4, 0.6], mean=0.5, std=0.1414)) == "50.00 ± 14.14"
    assert format_delta(None) == "n/a"
    assert format_delta(0.0123) == "+1.23"
    assert format_delta(-0.5) == "-50.00"


def test_render_comparison_table() -> None:
    runs = [
        RunRecord(kind=RunKind.BASELINE, seed=0, report=_report(hit_b=False)),
        RunRecord(kind=RunKind.CFPL, seed=0, report=_report(hit_b=True)),
        RunRecord(kind=RunKind.CFPL, seed=1, error="RuntimeError: boom"),
    ]
    report = aggregate(runs, [0, 1])
    assert report.delta("majority.ap") == pytest.approx(0.5)

    text = render_comparison(report, "demo")
    assert text.startswith("# Comparison: demo\n")
    assert "Seeds: 0, 1 (2 of 3 runs succeeded)" in text
    assert "| majority | AP@0.5 | 50.00 | 100.00 | +50.00 |" in text
    assert "| minority | Recall@0.5 | 100.00 | 100.00 | +0.00 |" in text
    assert "- cfpl seed 1: RuntimeError: boom" in text
