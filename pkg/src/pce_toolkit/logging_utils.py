"""Rich-backed logging setup shared by the CLI and the library."""

from __future__ import annotations

import logging
import os

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from pce_toolkit.errors import ParameterError
from pce_toolkit.models.enums import LogLevel

LOG_ENV_VAR = "PCE_LOG"
PACKAGE_LOGGER = "pce_toolkit"

logger = logging.getLogger(__name__)

_LEVELS = {
    LogLevel.ERROR: logging.ERROR,
    LogLevel.WARN: logging.WARNING,
    LogLevel.INFO: logging.INFO,
    LogLevel.DEBUG: logging.DEBUG,
}


def resolve_log_level(explicit: str | LogLevel | None = None) -> LogLevel:
    """Pick the level from the flag, then `PCE_LOG`, then `warn`."""

    if explicit:
        raw = str(getattr(explicit, "value", explicit)).strip().lower()
        try:
            return LogLevel("warn" if raw == "warning" else raw)
        except ValueError as exc:
            raise ParameterError(f"unknown log level {raw!r}", module="cli") from exc
    load_dotenv()
    raw = os.getenv(LOG_ENV_VAR, "").strip().lower()
    if raw == "warning":
        raw = LogLevel.WARN.value
    if not raw:
        return LogLevel.WARN
    try:
        return LogLevel(raw)
    except ValueError:
        logger.warning("ignoring %s=%r; expected one of %s", LOG_ENV_VAR, raw, ", ".join(level.value for level in LogLevel))
        return LogLevel.WARN


def configure_logging(level: str | LogLevel | None = None) -> logging.Logger:
    """Install a single stderr RichHandler on the package logger."""

    resolved = resolve_log_level(level)
    logger = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
        markup=False,
    )
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(_LEVELS[resolved])
    logger.propagate = False
    return logger
