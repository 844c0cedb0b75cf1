"""Paired baseline/CFPL comparison.

For each seed in ``config.comparison_seeds`` both arms train on the same
data with the same seed and differ only in ``train.cfpl.enabled``.  Each arm
is scored on the test split with its final weights.  A failing arm is
recorded with its error and the others keep running.
"""

from __future__ import annotations

from functools import partial
from pathlib import Path

import anyio
import numpy as np
from anyio import to_process
from loguru import logger

from sparsedet.detector.network import GridDetector
from sparsedet.engine.trainer import train
from sparsedet.evaluation.artifacts import plot_group_pr_curves, save_figure, write_report
from sparsedet.evaluation.render import render_comparison
from sparsedet.evaluation.report import evaluate
from sparsedet.log import setup_logging
from sparsedet.models.catalog import ClassCatalog
from sparsedet.models.enums import ClassGroup, RunKind, SplitName
from sparsedet.models.evaluation import EvalReport
from sparsedet.models.experiment import ComparisonReport, ExperimentConfig, MetricSummary, RunRecord
from sparsedet.models.scene import DatasetSplit
from sparsedet.settings import get_settings
from sparsedet.store.local import DatasetStore, atomic_write
from sparsedet.store.runs import RunDirectory, finish_manifest, new_manifest

GROUP_METRICS = ("ap", "recall", "background_rate")
SUMMARY_METRICS = ("map50", "mean_recall", *(f"{g.value}.{m}" for g in ClassGroup for m in GROUP_METRICS))


def arm_config(config: ExperimentConfig, kind: RunKind, seed: int) -> ExperimentConfig:
    """``config`` with the train seed set and CFPL switched on or off."""
    cfpl = config.train.cfpl.model_copy(update={"enabled": kind == RunKind.CFPL})
    train_cfg = config.train.model_copy(update={"seed": seed, "cfpl": cfpl})
    return config.model_copy(update={"train": train_cfg})


def run_arm(
    split: DatasetSplit,
    config: ExperimentConfig,
    catalog: ClassCatalog,
    kind: RunKind,
    seed: int,
    run_dir: RunDirectory,
    *,
    device: str = "cpu",
    dataset_fingerprint: str | None = None,
) -> RunRecord:
    """Train and test one arm; any exception becomes ``RunRecord.error``."""
    cfg = arm_config(config, kind, seed)
    logger.info("Comparison arm {} seed {} -> {}", kind.value, seed, run_dir.path)
    try:
        run_dir.prepare(cfg)
        manifest = new_manifest(
            f"compare:{kind.value}",
            config_path=run_dir.config_path,
            seeds=[seed],
            dataset_fingerprint=dataset_fingerprint,
            catalog_fingerprint=catalog.fingerprint,
        )
        result = train(
            split,
            cfg.train,
            catalog,
            eval_config=cfg.evaluation,
            run_dir=run_dir,
            device=device,
            provenance={
                "dataset_fingerprint": dataset_fingerprint,
                "catalog_fingerprint": catalog.fingerprint,
                "scene_fingerprint": cfg.scene.fingerprint,
                "config_json": cfg.model_dump_json(),
            },
        )
        model = result.build_model(GridDetector(len(catalog), cfg.train.model, cfg.train.image_size)).to(device)
        test_config = cfg.evaluation.model_copy(update={"split": SplitName.TEST})
        report = evaluate(model, split.test, catalog, test_config, device=device, split=SplitName.TEST.value)
        write_report(report, run_dir.eval_dir)
        run_dir.write_manifest(finish_manifest(manifest))
    except Exception as exc:
        logger.exception("Comparison arm {} seed {} failed", kind.value, seed)
        return RunRecord(kind=kind, seed=seed, run_dir=str(run_dir.path), error=f"{type(exc).__name__}: {exc}")
    return RunRecord(kind=kind, seed=seed, run_dir=str(run_dir.path), report=report)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def run_comparison(
    split: DatasetSplit,
    config: ExperimentConfig,
    catalog: ClassCatalog,
    out_dir: RunDirectory,
    *,
    jobs: int = 1,
    data_dir: Path | None = None,
    device: str = "cpu",
    dataset_fingerprint: str | None = None,
) -> ComparisonReport:
    """Run every (seed, arm) pair, then aggregate and write the comparison files.

    With ``jobs > 1`` and a stored dataset (``data_dir``) the arms run in
    worker processes, each reloading the dataset from disk.
    """
    seeds = config.comparison_seeds
    pairs = [(seed, kind) for seed in seeds for kind in RunKind]
    out_dir.prepare(config)
    manifest = new_manifest(
        "compare",
        config_path=out_dir.config_path,
        seeds=seeds,
        dataset_fingerprint=dataset_fingerprint,
        catalog_fingerprint=catalog.fingerprint,
    )

    if jobs > 1 and data_dir is not None:
        logger.info("Running {} comparison arms in up to {} processes", len(pairs), jobs)
        runs = anyio.run(_run_parallel, pairs, config, out_dir, jobs, data_dir, device, dataset_fingerprint)
    else:
        runs = [
            run_arm(
                split,
                config,
                catalog,
                kind,
                seed,
                out_dir.arm(kind, seed),
                device=device,
                dataset_fingerprint=dataset_fingerprint,
            )
            for seed, kind in pairs
        ]

    report = aggregate(runs, seeds)
    write_comparison(report, out_dir, name=config.name)
    out_dir.write_manifest(finish_manifest(manifest))
    failed = [r for r in runs if not r.ok]
    if failed:
        logger.warning("{} of {} comparison arms failed", len(failed), len(runs))
    return report


async def _run_parallel(
    pairs: list[tuple[int, RunKind]],
    config: ExperimentConfig,
    out_dir: RunDirectory,
    jobs: int,
    data_dir: Path,
    device: str,
    dataset_fingerprint: str | None,
) -> list[RunRecord]:
    limiter = anyio.CapacityLimiter(jobs)
    results: dict[int, RunRecord] = {}
    config_json = config.model_dump_json()

    async def _one(i: int, seed: int, kind: RunKind) -> None:
        worker = partial(
            _arm_worker,
            str(data_dir),
            config_json,
            kind.value,
            seed,
            str(out_dir.arm(kind, seed).path),
            device,
            dataset_fingerprint,
        )
        raw = await to_process.run_sync(worker, limiter=limiter)
        results[i] = RunRecord.model_validate_json(raw)

    async with anyio.create_task_group() as tg:
        for i, (seed, kind) in enumerate(pairs):
            tg.start_soon(_one, i, seed, kind)
    return [results[i] for i in range(len(pairs))]


def _arm_worker(
    data_dir: str,
    config_json: str,
    kind: str,
    seed: int,
    run_dir: str,
    device: str,
    dataset_fingerprint: str | None,
) -> str:
    """Process entry point: reload the dataset and run one arm."""
    setup_logging(get_settings().log_level)
    split, catalog = DatasetStore(data_dir).load()
    record = run_arm(
        split,
        ExperimentConfig.model_validate_json(config_json),
        catalog,
        RunKind(kind),
        seed,
        RunDirectory(run_dir),
        device=device,
        dataset_fingerprint=dataset_fingerprint,
    )
    return record.model_dump_json()


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def metric_value(report: EvalReport, metric: str) -> float | None:
    """Look up ``map50``, ``mean_recall`` or ``<group>.<metric>`` in a report."""
    if metric == "map50":
        return report.map50
    if metric == "mean_recall":
        return report.mean_recall
    group, _, name = metric.partition(".")
    if group not in report.groups:
        return None
    return float(getattr(report.groups[group], name))


def summarize(values: list[float]) -> MetricSummary:
    """Mean and sample standard deviation (``ddof=1``; undefined below two values)."""
    if not values:
        return MetricSummary()
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else None
    return MetricSummary(values=list(values), mean=float(arr.mean()), std=std)


def aggregate(runs: list[RunRecord], seeds: list[int]) -> ComparisonReport:
    summary: dict[str, dict[str, MetricSummary]] = {}
    for kind in RunKind:
        reports = [r.report for r in runs if r.kind == kind and r.report is not None]
        per_metric = {}
        for metric in SUMMARY_METRICS:
            values = [v for v in (metric_value(rep, metric) for rep in reports) if v is not None]
            if values:
                per_metric[metric] = summarize(values)
        summary[kind.value] = per_metric
    return ComparisonReport(seeds=seeds, runs=runs, summary=summary)


def write_comparison(report: ComparisonReport, out_dir: RunDirectory, name: str | None = None) -> None:
    """``comparison.json``, ``comparison.md`` and ``group_pr_curves.png``."""
    out_dir.write_comparison(report)
    atomic_write(out_dir.path / "comparison.md", render_comparison(report, name))
    save_figure(plot_group_pr_curves(report), out_dir.path / "group_pr_curves.png")
