"""
Logging configuration for fndlink using loguru.

Console output is colour-coded and terse; an optional file sink keeps the
DEBUG trail of a run (per-slot decisions, fit diagnostics) next to its
artefacts.
"""

import os
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

DEFAULT_LEVEL_ENV = "FNDLINK_LOG_LEVEL"

# Track if logging has been configured to prevent duplicate handlers
_logging_configured = False


def default_level() -> str:
    """Log level from the environment, INFO when unset."""
    return os.getenv(DEFAULT_LEVEL_ENV, "INFO").upper()


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    force: bool = False,
) -> None:
    """
    Configure loguru sinks for the whole package.

    Args:
        level: Console level (TRACE, DEBUG, INFO, SUCCESS, WARNING, ERROR).
            Falls back to ``FNDLINK_LOG_LEVEL`` and then INFO.
        log_file: Optional path of a rotating DEBUG log.
        force: Reconfigure even if sinks were already installed.
    """
    global _logging_configured

    if _logging_configured and not force:
        return

    logger.remove()
    _logging_configured = True

    logger.add(
        sys.stderr,
        level=(level or default_level()).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level:8}</level> | <cyan>{extra[name]}</cyan>:<cyan>{function}</cyan> | <level>{message}</level>",
        colorize=True,
        filter=_ensure_name,
    )

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_file,
            level="DEBUG",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level:8} | {extra[name]}:{function}:{line} | {message}",
            rotation="10 MB",
            retention="7 days",
            compression="zip",
            filter=_ensure_name,
        )


def _ensure_name(record) -> bool:
    # records logged through the bare loguru logger carry no bound name
    record["extra"].setdefault("name", record["name"])
    return True


def get_logger(name: str):
    """
    Get a logger bound to a module name.

    Args:
        name: Usually ``__name__`` of the calling module.

    Returns:
        Logger instance bound with the module name.
    """
    return logger.bind(name=name)
