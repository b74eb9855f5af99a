"""Logging configuration."""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from config.settings import LoggingConfig

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = "INFO", config: "LoggingConfig | None" = None) -> None:
    """
    Configure logging for the application.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        config: Optional logging section of the settings; enables the
            rotating log file and can silence the console
    """
    handlers: list[logging.Handler] = []
    if config is None or config.console.enabled:
        # stdout carries command output (JSON, selected_L)
        handlers.append(logging.StreamHandler(sys.stderr))

    if config is not None and config.file.enabled:
        log_path = Path(config.file.path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(
            log_path,
            maxBytes=config.file.max_size_mb * 1024 * 1024,
            backupCount=config.file.backup_count,
            encoding="utf-8",
        ))

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=LOG_FORMAT,
        handlers=handlers or [logging.NullHandler()],
        force=True,
    )
