"""Experiment config files -- TOML in, TOML out.

A config file is a (possibly empty) TOML document whose tables mirror
:class:`~sparsedet.models.experiment.ExperimentConfig`.  Values can be
overridden by dotted paths, e.g. ``train.epochs=3`` or, on the command line,
``--train.epochs 3``.  Override values are parsed as TOML scalars, falling
back to a bare string.
"""

from __future__ import annotations

import tomllib
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import tomli_w
from pydantic import ValidationError

from sparsedet.models.experiment import ExperimentConfig


class ConfigError(ValueError):
    """The config file or an override is invalid."""

    def __init__(self, detail: str, source: str | Path | None = None) -> None:
        self.source = str(source) if source is not None else None
        prefix = f"invalid config {self.source}: " if self.source else "invalid config: "
        super().__init__(prefix + detail)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a TOML config file and return raw data."""
    p = Path(path)
    if not p.is_file():
        msg = f"file not found: {p}"
        raise ConfigError(msg, source=p)
    try:
        with p.open("rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc), source=p) from exc


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from an optional file plus overrides.

    Overrides are applied to the raw data before validation, so they are
    validated exactly like file values.
    """
    data = load_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        set_dotted(data, key, value)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc), source=path) from exc


def set_dotted(data: dict[str, Any], key: str, value: Any) -> None:
    """Assign ``value`` at dotted ``key``, creating intermediate tables."""
    parts = key.split(".")
    if not all(parts):
        msg = f"malformed override key '{key}'"
        raise ConfigError(msg)
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            msg = f"override '{key}' descends into non-table field '{part}'"
            raise ConfigError(msg)
        node = child
    node[parts[-1]] = value


def parse_value(raw: str) -> Any:
    """Interpret ``raw`` as a TOML value; fall back to the string itself."""
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def parse_override_args(args: Sequence[str]) -> dict[str, Any]:
    """Turn trailing CLI words into overrides.

    Accepts ``--a.b value``, ``--a.b=value`` and ``a.b=value``.
    """
    overrides: dict[str, Any] = {}
    words = list(args)
    i = 0
    while i < len(words):
        word = words[i]
        if word.startswith("--"):
            word = word[2:]
            if "=" not in word:
                if i + 1 >= len(words):
                    msg = f"override '--{word}' is missing a value"
                    raise ConfigError(msg)
                overrides[word] = parse_value(words[i + 1])
                i += 2
                continue
        if "=" not in word:
            msg = f"unexpected argument '{word}'; overrides look like --section.key value"
            raise ConfigError(msg)
        key, _, raw = word.partition("=")
        overrides[key] = parse_value(raw)
        i += 1
    return overrides


# ---------------------------------------------------------------------------
# Dumping
# ---------------------------------------------------------------------------


def dump_config(config: ExperimentConfig) -> str:
    """Render the fully resolved config as TOML (unset optional fields are omitted)."""
    return tomli_w.dumps(_drop_none(config.model_dump(mode="json")))


def _drop_none(data: dict[str, Any]) -> dict[str, Any]:
    return {k: _drop_none(v) if isinstance(v, dict) else v for k, v in data.items() if v is not None}


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)
