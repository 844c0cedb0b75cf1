"""Tests for the per-run log sink."""

from __future__ import annotations

from pathlib import Path

from loguru import logger

from sparsedet.log import add_run_sink


def test_run_sink_keeps_only_its_run(tmp_path: Path) -> None:
    path = tmp_path / "run" / "train.log"
    sink = add_run_sink(path, "cfpl_s0")
    try:
        with logger.contextualize(run="cfpl_s0"):
            logger.debug("step 1")
        with logger.contextualize(run="baseline_s0"):
            logger.info("other run")
        logger.info("no run")
    finally:
        logger.remove(sink)

    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].endswith(" | DEBUG    | cfpl_s0 | step 1")


def test_run_sink_level(tmp_path: Path) -> None:
    path = tmp_path / "train.log"
    sink = add_run_sink(path, "r", level="info")
    try:
        with logger.contextualize(run="r"):
            logger.debug("hidden")
            logger.warning("shown")
    finally:
        logger.remove(sink)

    assert [line.split(" | ")[-1] for line in path.read_text().splitlines()] == ["shown"]
