"""EvalReport files and plots.

``write_report`` produces::

    {out}/report.json
    {out}/confusion.csv
    {out}/pr_curves/<class_id>.csv
    {out}/pr_curves.png
    {out}/ap_recall_bars.png
    {out}/confusion.png
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import pyplot  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from sparsedet.evaluation.report import RECALL_GRID, interpolated_precision  # noqa: E402
from sparsedet.models.enums import ClassGroup, RunKind  # noqa: E402
from sparsedet.models.evaluation import EvalReport  # noqa: E402
from sparsedet.models.experiment import ComparisonReport  # noqa: E402
from sparsedet.store.local import atomic_write  # noqa: E402

_GROUP_COLORS = {ClassGroup.MAJORITY.value: "tab:red", ClassGroup.MINORITY.value: "tab:blue"}
_KIND_STYLES = {RunKind.BASELINE.value: "--", RunKind.CFPL.value: "-"}


def write_report(report: EvalReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    atomic_write(out / "report.json", report.model_dump_json(indent=2))
    atomic_write(out / "confusion.csv", confusion_csv(report))
    for metrics in report.classes:
        atomic_write(out / "pr_curves" / f"{metrics.class_id}.csv", pr_curve_csv(report, metrics.class_id))
    render_report_plots(report, out)


def render_report_plots(report: EvalReport, out_dir: Path) -> None:
    """(Re)draw the PNGs of a report."""
    save_figure(plot_pr_curves(report), out_dir / "pr_curves.png")
    save_figure(plot_ap_recall_bars(report), out_dir / "ap_recall_bars.png")
    save_figure(plot_confusion(report), out_dir / "confusion.png")


# -- CSV -------------------------------------------------------------------------


def confusion_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    labels = [m.name for m in report.classes] + ["background"]
    writer.writerow(["gt\\pred", *labels])
    for label, row in zip(labels, report.confusion, strict=True):
        writer.writerow([label, *row])
    return buf.getvalue()


def pr_curve_csv(report: EvalReport, class_id: int) -> str:
    curve = report.classes[class_id].pr_curve
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["confidence", "precision", "recall"])
    for c, p, r in zip(curve.confidence, curve.precision, curve.recall, strict=True):
        writer.writerow([f"{c:.6f}", f"{p:.6f}", f"{r:.6f}"])
    return buf.getvalue()


# -- Plots -----------------------------------------------------------------------


def plot_pr_curves(report: EvalReport) -> Figure:
    fig, ax = pyplot.subplots(1, 1, figsize=(9, 6))
    curves = []
    for m in report.classes:
        if m.ap is None:
            continue
        y = interpolated_precision(m.pr_curve)
        curves.append(y)
        ax.plot(RECALL_GRID, y, linewidth=1, label=f"{m.name} {m.ap:.3f}")
    if curves:
        ax.plot(
            RECALL_GRID,
            np.mean(curves, axis=0),
            linewidth=3,
            color="blue",
            label=f"all classes {report.map50:.3f} mAP@0.5",
        )
        ax.legend(bbox_to_anchor=(1.04, 1), loc="upper left")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title(f"Precision-Recall Curve ({report.split})")
    return fig


def plot_ap_recall_bars(report: EvalReport) -> Figure:
    fig, ax = pyplot.subplots(1, 1, figsize=(max(6, 1.4 * len(report.classes)), 5))
    x = np.arange(len(report.classes))
    ap = [m.ap or 0.0 for m in report.classes]
    recall = [m.recall or 0.0 for m in report.classes]
    hatches = ["//" if m.group == ClassGroup.MAJORITY else "" for m in report.classes]
    for offset, values, label, color in ((-0.2, ap, "AP@0.5", "tab:green"), (0.2, recall, "Recall", "tab:orange")):
        bars = ax.bar(x + offset, values, width=0.4, label=label, color=color)
        for bar, hatch in zip(bars, hatches, strict=True):
            bar.set_hatch(hatch)
    ax.set_xticks(x, [m.name for m in report.classes], rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_title(f"AP and recall at confidence {report.conf_threshold:g} (hatched: majority)")
    if len(report.classes):
        ax.legend(loc="upper right")
    return fig


def plot_confusion(report: EvalReport) -> Figure:
    matrix = np.asarray(report.confusion, dtype=np.float64)
    labels = [m.name for m in report.classes] + ["background"]
    size = len(labels)
    fig, ax = pyplot.subplots(1, 1, figsize=(1.2 * size + 3, 1.2 * size + 2))
    if matrix.size:
        rows = matrix.sum(axis=1, keepdims=True)
        normalized = np.divide(matrix, rows, out=np.zeros_like(matrix), where=rows > 0)
        ax.imshow(normalized, cmap="Blues", vmin=0, vmax=1)
        for i in range(size):
            for j in range(size):
                ax.text(j, i, f"{int(matrix[i, j])}", ha="center", va="center", fontsize=8)
    ax.set_xticks(range(size), labels, rotation=45, ha="right")
    ax.set_yticks(range(size), labels)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Ground truth")
    ax.set_title("Confusion matrix (row-normalized)")
    return fig


def plot_group_pr_curves(comparison: ComparisonReport) -> Figure:
    """Mean group PR curves over seeds: baseline dashed, CFPL solid."""
    fig, ax = pyplot.subplots(1, 1, figsize=(8, 6))
    drawn = False
    for kind in RunKind:
        for group in ClassGroup:
            curves = _group_curves(comparison, kind, group.value)
            if not curves:
                continue
            ax.plot(
                RECALL_GRID,
                np.mean(curves, axis=0),
                linestyle=_KIND_STYLES[kind.value],
                color=_GROUP_COLORS[group.value],
                linewidth=2,
                label=f"{group.value} ({kind.value})",
            )
            drawn = True
    if drawn:
        ax.legend(loc="lower left")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title("Group Precision-Recall Curves")
    return fig


def _group_curves(comparison: ComparisonReport, kind: RunKind, group: str) -> Sequence[list[float]]:
    return [
        run.report.groups[group].pr_precision
        for run in comparison.runs
        if run.kind == kind and run.report is not None and group in run.report.groups
    ]


def save_figure(fig: Figure, path: Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=150, bbox_inches="tight")
    pyplot.close(fig)
    atomic_write(path, buf.getvalue())
