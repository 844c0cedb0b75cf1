"""Process settings loaded from SPARSEDET_* environment variables."""

from __future__ import annotations

from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class SparsedetSettings(BaseSettings):
    """Settings of the host process, as opposed to an experiment.

    All fields are read from environment variables with the ``SPARSEDET_``
    prefix.  For example, ``SPARSEDET_DEVICE=cpu`` maps to ``device``.

    Anything that changes results (seeds, epochs, label cap...) belongs in the
    experiment config file instead, so that a run directory fully describes
    how it was produced.
    """

    model_config = SettingsConfigDict(
        env_prefix="SPARSEDET_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # -- Logging ---------------------------------------------------------------
    log_level: str = "INFO"

    # -- Storage ---------------------------------------------------------------
    runs_root: str = "./runs"
    """Parent directory of run and comparison directories when ``--out`` is not given."""

    # -- Compute ---------------------------------------------------------------
    device: Literal["auto", "cpu", "cuda"] = "auto"
    """``auto`` picks CUDA when available."""

    torch_threads: int | None = None
    """Intra-op thread count passed to ``torch.set_num_threads``."""

    jobs: int = 1
    """Paired comparison runs executed in parallel worker processes."""

    def resolve_device(self) -> str:
        if self.device != "auto":
            return self.device
        import torch

        return "cuda" if torch.cuda.is_available() else "cpu"


def get_settings() -> SparsedetSettings:
    """Return a cached settings instance.

    Reads from environment variables and ``.env`` on first call, then returns
    the same object.  Call ``_get_settings_cached.cache_clear()`` in tests to
    force a re-read after overriding env vars.
    """
    return _get_settings_cached()


@lru_cache(maxsize=1)
def _get_settings_cached() -> SparsedetSettings:
    return SparsedetSettings()
