"""`key=value` config files and run-level settings."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from pce_toolkit.errors import ParameterError
from pce_toolkit.logging_utils import resolve_log_level
from pce_toolkit.models.config import RunConfig, default_workers

RUN_KEYS = {"workers", "log_level"}


def load_config_file(path: Path) -> dict[str, str]:
    """Parse a `key=value` file; keys are normalised to option names (underscores)."""

    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ParameterError(f"config key {key!r} has no value", module="config")
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def build_run_config(
    *,
    command: str | None,
    config_path: Path | None,
    log_level: str | None,
    workers: int | None,
) -> RunConfig:
    """Merge flags over config-file values into a validated RunConfig."""

    overrides = load_config_file(config_path) if config_path else {}
    payload: dict[str, Any] = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "overrides": {k: v for k, v in overrides.items() if k not in RUN_KEYS},
    }
    payload["log_level"] = resolve_log_level(log_level or overrides.get("log_level"))
    if workers is not None:
        payload["workers"] = workers
    elif "workers" in overrides:
        payload["workers"] = overrides["workers"]
    else:
        payload["workers"] = default_workers()
    return RunConfig.model_validate(payload)
