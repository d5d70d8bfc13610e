from __future__ import annotations

import logging
import time
from pathlib import Path
from uuid import uuid4

import pytest
from pydantic import ValidationError
from rich.logging import RichHandler

from pce_toolkit.errors import ParameterError
from pce_toolkit.logging_utils import LOG_ENV_VAR, configure_logging, resolve_log_level
from pce_toolkit.models.config import EvalConfig, OmpConfig, RunConfig
from pce_toolkit.models.enums import LogLevel
from pce_toolkit.settings import build_run_config, load_config_file
from pce_toolkit.workers.pool import ordered_map


def _config(text: str) -> Path:
    root = Path("outputs") / "pytest_tmp" / str(uuid4())
    root.mkdir(parents=True, exist_ok=True)
    path = root / "pce.env"
    path.write_text(text, encoding="utf-8")
    return path


def test_config_keys_are_normalised() -> None:
    path = _config("# defaults\nMax-Sparsity = 8\npatch=5\n")
    assert load_config_file(path) == {"max_sparsity": "8", "patch": "5"}


def test_config_key_without_value_is_rejected() -> None:
    with pytest.raises(ParameterError):
        load_config_file(_config("patch\n"))


def test_missing_config_file_raises_os_error() -> None:
    with pytest.raises(FileNotFoundError):
        load_config_file(Path("outputs") / "pytest_tmp" / "does-not-exist.env")


def test_run_config_splits_run_keys_from_overrides(monkeypatch) -> None:
    """workers and log_level configure the run; everything else defaults subcommand options."""

    monkeypatch.delenv(LOG_ENV_VAR, raising=False)
    path = _config("workers=3\nlog_level=info\ncompression=6\n")
    run = build_run_config(command="compress", config_path=path, log_level=None, workers=None)
    assert run.workers == 3
    assert run.log_level is LogLevel.INFO
    assert run.overrides == {"compression": "6"}


def test_flags_beat_config_file() -> None:
    path = _config("workers=3\nlog_level=info\n")
    run = build_run_config(command="demo", config_path=path, log_level="debug", workers=1)
    assert run.workers == 1
    assert run.log_level is LogLevel.DEBUG


def test_run_config_rejects_zero_workers() -> None:
    with pytest.raises(ValidationError):
        RunConfig(workers=0)


def test_log_level_resolution_order(monkeypatch) -> None:
    """Flag, then PCE_LOG, then warn."""

    monkeypatch.setenv(LOG_ENV_VAR, "debug")
    assert resolve_log_level() is LogLevel.DEBUG
    assert resolve_log_level("error") is LogLevel.ERROR
    assert resolve_log_level("WARNING") is LogLevel.WARN
    with pytest.raises(ParameterError):
        resolve_log_level("loud")


def test_unknown_env_log_level_falls_back_with_a_warning(monkeypatch, caplog) -> None:
    """A bad PCE_LOG value is reported, then warn is used."""

    monkeypatch.setattr(logging.getLogger("pce_toolkit"), "propagate", True)
    caplog.set_level(logging.WARNING, logger="pce_toolkit")
    monkeypatch.setenv(LOG_ENV_VAR, "verbose")
    assert resolve_log_level() is LogLevel.WARN
    assert any("PCE_LOG='verbose'" in rec.getMessage() for rec in caplog.records)

    caplog.clear()
    monkeypatch.setenv(LOG_ENV_VAR, "")
    assert resolve_log_level() is LogLevel.WARN
    assert not caplog.records


def test_configure_logging_installs_one_handler() -> None:
    first = configure_logging("info")
    second = configure_logging("debug")
    assert first is second
    assert sum(isinstance(h, RichHandler) for h in second.handlers) == 1
    assert second.level == logging.DEBUG


def test_model_configs_validate() -> None:
    with pytest.raises(ValidationError):
        OmpConfig(patch_size=4, patch_stride=5)
    with pytest.raises(ValidationError):
        EvalConfig(iou_thresholds=(0.7, 0.5))
    with pytest.raises(ValidationError):
        OmpConfig(unknown=1)
    assert EvalConfig().iou_thresholds[-1] == 0.95


def test_ordered_map_keeps_input_order() -> None:
    def slow_square(value: int) -> int:
        time.sleep(0.001 * (5 - value))
        return value * value

    assert ordered_map(slow_square, range(5), workers=4) == [0, 1, 4, 9, 16]
    with pytest.raises(ParameterError):
        ordered_map(slow_square, [1], workers=0)
