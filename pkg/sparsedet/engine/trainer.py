"""Deterministic training loop.

Per batch: augment -> forward -> assign targets on visible labels only ->
CFPL mask (when enabled) -> composite loss -> AdamW step.  The validation
split is scored every ``eval_every`` epochs (and always after the last one)
and the best-mAP weights are kept.
"""

from __future__ import annotations

import csv
import io
import os
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from loguru import logger

from sparsedet.detector.assign import assign_targets
from sparsedet.detector.checkpoint import save_checkpoint
from sparsedet.detector.network import GridDetector, GridGeometry
from sparsedet.engine.augment import augment
from sparsedet.evaluation.report import evaluate, images_to_tensor
from sparsedet.log import add_run_sink
from sparsedet.loss.total import LossBreakdown, total_loss
from sparsedet.models.catalog import ClassCatalog
from sparsedet.models.enums import SplitName
from sparsedet.models.evaluation import EvalConfig, EvalReport
from sparsedet.models.scene import DatasetSplit, SceneSample
from sparsedet.models.training import TrainConfig
from sparsedet.store.local import atomic_write, write_json
from sparsedet.store.runs import RunDirectory


class NonFiniteLossError(RuntimeError):
    """The loss became NaN or infinite."""

    def __init__(self, step: int, epoch: int, sample_indices: list[int], dump_path: Path | None = None) -> None:
        self.step = step
        self.epoch = epoch
        self.sample_indices = sample_indices
        self.dump_path = dump_path
        where = f" (diagnostics in {dump_path})" if dump_path else ""
        super().__init__(f"non-finite loss at epoch {epoch}, step {step}; batch samples {sample_indices}{where}")


def seed_everything(seed: int) -> None:
    """Seed python, numpy and torch and switch torch to deterministic kernels."""
    os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
    random.seed(seed)
    np.random.seed(seed)  # noqa: NPY002
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    torch.backends.cudnn.benchmark = False
    torch.backends.cudnn.deterministic = True


# ---------------------------------------------------------------------------
# Metrics log
# ---------------------------------------------------------------------------


@dataclass
class MetricsLog:
    """Append-only table of step rows (loss breakdown) and epoch rows (validation).

    After :meth:`attach` every row is also appended to a CSV file as it is
    added, so a run that stops early keeps the rows logged so far.
    """

    num_classes: int
    rows: list[list[str]] = field(default_factory=list)
    path: Path | None = None

    @property
    def header(self) -> list[str]:
        return ["kind", "epoch", *LossBreakdown.header(self.num_classes), "val_map50", "val_recall"]

    def attach(self, path: Path) -> None:
        """Start ``path`` with the header and the rows held so far."""
        atomic_write(path, self.to_csv())
        self.path = path

    def add_step(self, epoch: int, step: int, breakdown: LossBreakdown) -> None:
        self._append(["step", str(epoch), *breakdown.row(step), "", ""])

    def add_epoch(self, epoch: int, step: int, mean_loss: float, report: EvalReport | None) -> None:
        val = [f"{report.map50:.6f}", f"{report.mean_recall:.6f}"] if report is not None else ["", ""]
        blanks = [""] * (4 + self.num_classes)
        self._append(["epoch", str(epoch), str(step), f"{mean_loss:.6f}", *blanks, *val])

    def _append(self, row: list[str]) -> None:
        self.rows.append(row)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8", newline="") as f:
                csv.writer(f, lineterminator="\n").writerow(row)

    def step_losses(self) -> list[float]:
        return [float(r[3]) for r in self.rows if r[0] == "step"]

    def epoch_rows(self) -> list[dict[str, str]]:
        return [dict(zip(self.header, r, strict=True)) for r in self.rows if r[0] == "epoch"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()


@dataclass
class TrainResult:
    final_state: dict[str, torch.Tensor]
    best_state: dict[str, torch.Tensor]
    best_map50: float
    best_epoch: int
    log: MetricsLog
    final_report: EvalReport | None = None

    def build_model(self, model: GridDetector, *, best: bool = False) -> GridDetector:
        model.load_state_dict(self.best_state if best else self.final_state)
        return model


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train(
    split: DatasetSplit,
    config: TrainConfig,
    catalog: ClassCatalog,
    *,
    eval_config: EvalConfig | None = None,
    run_dir: RunDirectory | None = None,
    device: str | torch.device = "cpu",
    provenance: dict[str, str | None] | None = None,
) -> TrainResult:
    """Train a fresh detector on ``split.train``.

    When ``run_dir`` is given, ``log.csv``, ``train.log``, ``ckpt_best.pt``
    and ``ckpt_final.pt`` are written there.  ``provenance`` (fingerprints,
    config JSON) is stored in the checkpoints.
    """
    if not split.train:
        msg = "train partition is empty"
        raise ValueError(msg)

    args = (split, config, catalog, eval_config or EvalConfig(), run_dir, device, provenance or {})
    if run_dir is None:
        return _train(*args)

    run = run_dir.path.name
    sink = add_run_sink(run_dir.train_log, run)
    try:
        with logger.contextualize(run=run):
            return _train(*args)
    finally:
        logger.remove(sink)


def _train(
    split: DatasetSplit,
    config: TrainConfig,
    catalog: ClassCatalog,
    eval_config: EvalConfig,
    run_dir: RunDirectory | None,
    device: str | torch.device,
    provenance: dict[str, str | None],
) -> TrainResult:
    seed_everything(config.seed)
    num_classes = len(catalog)
    geometry = GridGeometry.from_config(config.model, config.image_size)
    model = GridDetector(num_classes, config.model, config.image_size).to(device)
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.learning_rate,
        betas=config.betas,
        weight_decay=config.weight_decay,
    )
    rng = np.random.default_rng([config.seed, 1])
    val_config = eval_config.model_copy(update={"split": SplitName.VAL})
    log = MetricsLog(num_classes)
    if run_dir is not None:
        log.attach(run_dir.log_csv)
    whitelist = config.cfpl.resolve_whitelist(catalog.whitelist)

    logger.info(
        "Training {} epochs on {} images (batch {}, lr {}, CFPL {}{})",
        config.epochs,
        len(split.train),
        config.batch_size,
        config.learning_rate,
        "on" if config.cfpl.enabled else "off",
        f", whitelist {sorted(whitelist)}" if config.cfpl.enabled else "",
    )

    best_map50, best_epoch = -1.0, 0
    best_state = _snapshot(model)
    report: EvalReport | None = None
    step = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = rng.permutation(len(split.train))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            indices = order[start : start + config.batch_size]
            batch = [augment(split.train[int(i)], rng, config.augment) for i in indices]
            step += 1
            breakdown = _step(model, optimizer, batch, config, geometry, catalog, run_dir, epoch, step)
            epoch_losses.append(breakdown.total)
            if step % config.log_every == 0:
                log.add_step(epoch, step, breakdown)
                logger.debug(breakdown.log_line(step))

        mean_loss = float(np.mean(epoch_losses))
        evaluated: EvalReport | None = None
        if split.val and (epoch % config.eval_every == 0 or epoch == config.epochs):
            report = evaluate(model, split.val, catalog, val_config, device=device, split=SplitName.VAL.value)
            evaluated = report
            logger.info(
                "Epoch {}/{}: loss {:.4f}, val mAP@0.5 {:.4f}, recall {:.4f}",
                epoch,
                config.epochs,
                mean_loss,
                report.map50,
                report.mean_recall,
            )
            if report.map50 > best_map50:
                best_map50, best_epoch = report.map50, epoch
                best_state = _snapshot(model)
                if run_dir is not None:
                    save_checkpoint(run_dir.ckpt_best, model, **_meta(provenance, epoch, report.map50))
        else:
            logger.info("Epoch {}/{}: loss {:.4f}", epoch, config.epochs, mean_loss)
        log.add_epoch(epoch, step, mean_loss, evaluated)

    final_state = _snapshot(model)
    if best_epoch == 0:
        best_state, best_epoch, best_map50 = final_state, config.epochs, report.map50 if report else 0.0

    if run_dir is not None:
        final_map = report.map50 if report is not None else 0.0
        save_checkpoint(run_dir.ckpt_final, model, **_meta(provenance, config.epochs, final_map))
        if not run_dir.ckpt_best.exists():
            save_checkpoint(run_dir.ckpt_best, model, **_meta(provenance, config.epochs, final_map))

    return TrainResult(
        final_state=final_state,
        best_state=best_state,
        best_map50=best_map50,
        best_epoch=best_epoch,
        log=log,
        final_report=report,
    )


def _step(
    model: GridDetector,
    optimizer: torch.optim.Optimizer,
    batch: list[SceneSample],
    config: TrainConfig,
    geometry: GridGeometry,
    catalog: ClassCatalog,
    run_dir: RunDirectory | None,
    epoch: int,
    step: int,
) -> LossBreakdown:
    device = next(model.parameters()).device
    images = images_to_tensor(batch).to(device)
    assignment = assign_targets([(s.visible_classes, s.visible_boxes) for s in batch], geometry, len(catalog))
    grid = model(images)
    loss, breakdown = total_loss(grid, assignment, config.weights, config.cfpl, geometry, catalog.whitelist)

    if not torch.isfinite(loss):
        indices = [s.index for s in batch]
        dump = None
        if run_dir is not None:
            dump = run_dir.path / f"nonfinite_step{step}.json"
            write_json(
                dump,
                {
                    "epoch": epoch,
                    "step": step,
                    "sample_indices": indices,
                    "breakdown": breakdown.row(step),
                    "scores_finite": bool(torch.isfinite(grid.class_scores).all()),
                    "box_dists_finite": bool(torch.isfinite(grid.box_dists).all()),
                },
            )
        raise NonFiniteLossError(step, epoch, indices, dump)

    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    optimizer.step()
    return breakdown


def _snapshot(model: GridDetector) -> dict[str, torch.Tensor]:
    return {k: v.detach().cpu().clone() for k, v in model.state_dict().items()}


def _meta(provenance: dict[str, str | None], epoch: int, val_map50: float) -> dict[str, object]:
    return {**provenance, "extra": {"epoch": epoch, "val_map50": val_map50}}


def load_metrics_log(path: Path, num_classes: int) -> MetricsLog:
    """Read back a ``log.csv`` written through :meth:`MetricsLog.attach`."""
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return MetricsLog(num_classes=num_classes, rows=rows[1:])
