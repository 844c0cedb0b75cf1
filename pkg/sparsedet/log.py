"""Logging configuration using loguru.

Intercepts stdlib logging so that matplotlib, PIL and torch all flow
through loguru with a unified format.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

from loguru import logger

_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)

# train.log: one line per record, tagged with the run name
_RUN_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[run]} | {message}"


class _InterceptHandler(logging.Handler):
    """Bridge stdlib logging records into loguru."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level: str | int = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Walk the call stack so loguru reports the real call-site
        frame = logging.currentframe()
        depth = 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def setup_logging(level: str = "INFO") -> None:
    """Configure loguru as the sole logging sink.

    Call this once at process startup (the CLI does it before dispatching).
    """
    level = level.upper()

    logger.remove()
    logger.add(sys.stderr, level=level, format=_FORMAT)

    logging.basicConfig(handlers=[_InterceptHandler()], level=0, force=True)

    for name in ("matplotlib", "PIL", "torch"):
        logging.getLogger(name).setLevel(logging.WARNING)

    logger.debug("Logging initialised (level={})", level)


def add_run_sink(path: Path, run: str, level: str = "DEBUG") -> int:
    """Write records logged under ``logger.contextualize(run=run)`` to ``path``.

    Records of other runs in the same process are left out.  The sink is
    synchronous; the file is complete when the run returns.  Remove it with
    ``logger.remove(handler_id)``.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    return logger.add(
        path,
        level=level.upper(),
        format=_RUN_FORMAT,
        colorize=False,
        mode="w",
        filter=lambda record: record["extra"].get("run") == run,
    )
