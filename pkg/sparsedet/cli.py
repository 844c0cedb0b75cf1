from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click
from loguru import logger

from sparsedet.config import ConfigError, load_config, parse_override_args
from sparsedet.models.experiment import ExperimentConfig
from sparsedet.settings import SparsedetSettings, get_settings

# Trailing ``--section.key value`` words are collected as config overrides.
_OVERRIDES: dict[str, Any] = {"ignore_unknown_options": True, "allow_extra_args": True}


def _user_errors() -> tuple[type[BaseException], ...]:
    from sparsedet.detector.checkpoint import CheckpointNotFoundError
    from sparsedet.evaluation.report import FingerprintMismatchError
    from sparsedet.store.local import DatasetNotFoundError
    from sparsedet.synth.protocol import DegenerateSplitError

    return (ConfigError, DatasetNotFoundError, CheckpointNotFoundError, FingerprintMismatchError, DegenerateSplitError)


class SparsedetGroup(click.Group):
    """Click group that maps failures to exit codes.

    ``1``: usage, config and missing-input errors.  ``2``: anything that
    fails while running (non-finite loss, packing failure, IO errors...).
    """

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.Abort:
            click.echo("Aborted!", err=True)
            raise SystemExit(1) from None
        except click.ClickException as exc:
            exc.show()
            raise SystemExit(1) from None
        except _user_errors() as exc:
            click.echo(f"Error: {exc}", err=True)
            raise SystemExit(1) from None
        except Exception as exc:
            logger.opt(exception=exc).debug("Command failed")
            click.echo(f"Error: {type(exc).__name__}: {exc}", err=True)
            raise SystemExit(2) from None


@dataclass
class CliState:
    config_path: Path | None
    seed: int | None
    out: Path | None
    settings: SparsedetSettings

    def load(self, overrides: tuple[str, ...] | list[str]) -> ExperimentConfig:
        """Config file + ``--seed`` + trailing overrides, validated."""
        values = parse_override_args(overrides)
        if self.seed is not None:
            values.setdefault("seed", self.seed)
            values.setdefault("train.seed", self.seed)
        return load_config(self.config_path, values)

    def out_dir(self, default_name: str) -> Path:
        return self.out if self.out is not None else Path(self.settings.runs_root) / default_name

    def device(self) -> str:
        return self.settings.resolve_device()


@click.group(cls=SparsedetGroup)
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Experiment config (TOML).  Defaults apply to anything unset.",
)
@click.option("--seed", type=int, default=None, help="Master seed (also the training seed unless overridden).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Output directory.")
@click.option("--log-level", default=None, help="Log level (default: from SPARSEDET_LOG_LEVEL or INFO).")
@click.version_option(package_name="sparsedet")
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    seed: int | None,
    out: Path | None,
    log_level: str | None,
) -> None:
    """sparsedet - partial-label object detection with constrained false positive masking."""
    from sparsedet.log import setup_logging

    settings = get_settings()
    setup_logging(log_level or settings.log_level)
    if settings.torch_threads:
        import torch

        torch.set_num_threads(settings.torch_threads)
    ctx.obj = CliState(config_path=config_path, seed=seed, out=out, settings=settings)


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


@main.command(context_settings=_OVERRIDES)
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_obj
def generate(state: CliState, overrides: tuple[str, ...]) -> None:
    """Generate a synthetic dataset (images, labels, oracle labels, catalog, stats)."""
    from sparsedet.config import dump_config
    from sparsedet.models.enums import SplitName
    from sparsedet.models.scene import DatasetStats, PartitionStats
    from sparsedet.store.local import DatasetStore
    from sparsedet.store.runs import finish_manifest, new_manifest
    from sparsedet.synth.protocol import build_benchmark, class_counts, estimate_labeling_effort

    config = state.load(overrides)
    out = state.out if state.out is not None else Path("data") / config.name
    manifest = new_manifest("generate", config_path=state.config_path, seeds=[config.seed])

    split, catalog = build_benchmark(config)
    stats = DatasetStats(
        partitions={
            name.value: PartitionStats(
                images=len(split.partition(name)),
                visible_per_class=class_counts(split.partition(name), len(catalog), visible_only=True),
                total_per_class=class_counts(split.partition(name), len(catalog), visible_only=False),
            )
            for name in SplitName
        },
        labeling=estimate_labeling_effort(split.train, config.label_cap.seconds_per_box),
    )
    fingerprint = DatasetStore(out).write(
        split,
        catalog,
        config_toml=dump_config(config),
        stats=stats,
        manifest=finish_manifest(manifest),
    )
    effort = stats.labeling
    click.echo(f"Dataset written to {out} (fingerprint {fingerprint[:12]})")
    if effort is not None:
        click.echo(
            f"Labeling effort: {effort.partial_hours:.1f} h for {effort.labeled_boxes} visible boxes "
            f"vs {effort.full_hours:.1f} h for all {effort.total_boxes}"
        )


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------


@main.command(context_settings=_OVERRIDES)
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path), help="Dataset directory.")
@click.option("--name", default=None, help="Run name (default: config name).")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_obj
def train(state: CliState, data_dir: Path, name: str | None, overrides: tuple[str, ...]) -> None:
    """Train one detector on a stored dataset."""
    from sparsedet.engine.trainer import train as train_detector
    from sparsedet.evaluation.artifacts import write_report
    from sparsedet.store.local import DatasetStore
    from sparsedet.store.runs import RunDirectory, finish_manifest, new_manifest

    config = state.load(overrides)
    store = DatasetStore(data_dir)
    split, catalog = store.load()
    fingerprint = store.fingerprint()

    run_dir = RunDirectory(state.out_dir(name or config.name))
    run_dir.prepare(config)
    manifest = new_manifest(
        "train",
        config_path=state.config_path,
        seeds=[config.train.seed],
        dataset_fingerprint=fingerprint,
        catalog_fingerprint=catalog.fingerprint,
    )
    run_dir.write_manifest(manifest)

    result = train_detector(
        split,
        config.train,
        catalog,
        eval_config=config.evaluation,
        run_dir=run_dir,
        device=state.device(),
        provenance={
            "dataset_fingerprint": fingerprint,
            "catalog_fingerprint": catalog.fingerprint,
            "scene_fingerprint": config.scene.fingerprint,
            "config_json": config.model_dump_json(),
        },
    )
    if result.final_report is not None:
        write_report(result.final_report, run_dir.eval_dir)
    run_dir.write_manifest(finish_manifest(manifest))
    click.echo(f"Run written to {run_dir.path} (best val mAP@0.5 {result.best_map50:.4f} at epoch {result.best_epoch})")


@main.command(name="eval", context_settings=_OVERRIDES)
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Checkpoint file.")
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path), help="Dataset directory.")
@click.option("--split", "split_name", type=click.Choice(["train", "val", "test"]), default=None)
@click.option("--force", is_flag=True, default=False, help="Evaluate even if the dataset fingerprint differs.")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_obj
def evaluate_cmd(
    state: CliState,
    checkpoint: Path,
    data_dir: Path,
    split_name: str | None,
    force: bool,
    overrides: tuple[str, ...],
) -> None:
    """Evaluate a checkpoint against the oracle labels of one split."""
    from sparsedet.detector.checkpoint import load_checkpoint
    from sparsedet.evaluation.artifacts import write_report
    from sparsedet.evaluation.report import FingerprintMismatchError, evaluate
    from sparsedet.models.enums import SplitName
    from sparsedet.store.local import DatasetStore
    from sparsedet.store.runs import RunDirectory, finish_manifest, new_manifest

    config = state.load(overrides)
    ckpt = load_checkpoint(checkpoint)
    store = DatasetStore(data_dir)
    split, catalog = store.load()
    fingerprint = store.fingerprint()

    if ckpt.dataset_fingerprint != fingerprint:
        logger.warning(
            "Checkpoint fingerprint {} does not match dataset {}",
            str(ckpt.dataset_fingerprint)[:12],
            fingerprint[:12],
        )
        if not force:
            raise FingerprintMismatchError(ckpt.dataset_fingerprint, fingerprint)

    name = SplitName(split_name) if split_name else config.evaluation.split
    eval_config = config.evaluation.model_copy(update={"split": name})
    # Never inside the checkpoint's run directory.
    default_name = f"eval_{checkpoint.resolve().parent.name}_{checkpoint.stem}_{name.value}"
    out = RunDirectory(state.out_dir(default_name))
    out.prepare(config)
    manifest = new_manifest(
        "eval",
        config_path=state.config_path,
        seeds=[config.seed],
        dataset_fingerprint=fingerprint,
        catalog_fingerprint=catalog.fingerprint,
    )

    device = state.device()
    model = ckpt.build_model().to(device)
    report = evaluate(model, split.partition(name), catalog, eval_config, device=device, split=name.value)
    write_report(report, out.path)
    out.write_manifest(finish_manifest(manifest))
    click.echo(f"{name.value}: mAP@0.5 {report.map50:.4f}, mean recall {report.mean_recall:.4f} -> {out.path}")


@main.command(context_settings=_OVERRIDES)
@click.option("--data", "data_dir", required=True, type=click.Path(path_type=Path), help="Dataset directory.")
@click.option("--jobs", type=int, default=None, help="Parallel runs (default: SPARSEDET_JOBS or 1).")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_obj
def compare(state: CliState, data_dir: Path, jobs: int | None, overrides: tuple[str, ...]) -> None:
    """Paired baseline/CFPL runs over several seeds, with an aggregate table."""
    from sparsedet.engine.comparison import run_comparison
    from sparsedet.store.local import DatasetStore
    from sparsedet.store.runs import RunDirectory

    config = state.load(overrides)
    store = DatasetStore(data_dir)
    split, catalog = store.load()

    out = RunDirectory(state.out_dir(config.name))
    report = run_comparison(
        split,
        config,
        catalog,
        out,
        jobs=jobs or state.settings.jobs,
        data_dir=data_dir,
        device=state.device(),
        dataset_fingerprint=store.fingerprint(),
    )
    click.echo(f"Comparison written to {out.path}")
    click.echo((out.path / "comparison.md").read_text(encoding="utf-8"))
    failed = [r for r in report.runs if not r.ok]
    if failed:
        click.echo(f"Error: {len(failed)} of {len(report.runs)} runs failed", err=True)
        raise SystemExit(2)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
def report(directory: Path) -> None:
    """Re-render tables and plots of a comparison or evaluation directory."""
    from sparsedet.engine.comparison import write_comparison
    from sparsedet.evaluation.artifacts import render_report_plots
    from sparsedet.models.evaluation import EvalReport
    from sparsedet.store.runs import RunDirectory

    run_dir = RunDirectory(directory)
    if run_dir.comparison_json.is_file():
        name = load_config(run_dir.config_path).name if run_dir.config_path.is_file() else None
        write_comparison(run_dir.read_comparison(), run_dir, name=name)
        click.echo(f"Re-rendered comparison in {directory}")
        return

    for candidate in (directory / "report.json", run_dir.eval_dir / "report.json"):
        if candidate.is_file():
            saved = EvalReport.model_validate_json(candidate.read_text(encoding="utf-8"))
            render_report_plots(saved, candidate.parent)
            click.echo(f"Re-rendered report plots in {candidate.parent}")
            return

    msg = f"{directory} holds neither comparison.json nor an evaluation report.json"
    raise click.ClickException(msg)
