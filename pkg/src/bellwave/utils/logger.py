"""Logging setup for bellwave.

Log records go to stderr; stdout is reserved for CSV/JSON results.
"""

import logging
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "bellwave"
LOG_FORMAT = "%(asctime)s [%(levelname)-8s] %(name)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class FlushStreamHandler(logging.StreamHandler):
    """StreamHandler that flushes after each record so long runs report progress live."""

    def emit(self, record: logging.LogRecord) -> None:
        super().emit(record)
        self.flush()


def setup_logger(
    level: str = "INFO",
    log_file: Optional[str] = None,
    use_colors: bool = True,
) -> logging.Logger:
    """Configure the package logger.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path of a plain-text log file
        use_colors: Rich console handler when true, plain stderr lines otherwise

    Returns:
        The configured ``bellwave`` logger
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(getattr(logging, level.upper()))
    logger.handlers.clear()
    logger.propagate = False

    console_handler: logging.Handler
    if use_colors:
        console_handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            log_time_format=f"[{DATE_FORMAT}]",
        )
        console_handler.setFormatter(logging.Formatter("%(message)s"))
    else:
        console_handler = FlushStreamHandler()  # stderr
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    console_handler.setLevel(logger.level)
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setLevel(logger.level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(file_handler)

    return logger


def get_logger() -> logging.Logger:
    """Get the package logger.

    Handlers are attached by ``setup_logger``; until then records propagate
    to the root logger, which keeps library use quiet.
    """
    return logging.getLogger(LOGGER_NAME)
