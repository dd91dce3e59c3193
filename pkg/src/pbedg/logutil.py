# Copyright pbe-dg contributors. All Rights Reserved.

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

_DEFAULT_FORMATTER = logging.Formatter(
    fmt="%(asctime)s %(levelname)8s {%(threadName)-10s}:  %(module)s %(funcName)s: %(message)s",
)
_CONSOLE_FORMATTER = logging.Formatter(fmt="%(levelname)s %(name)s: %(message)s")


def default_log_file() -> Path:
    return Path.home() / ".pbedg" / "logs" / "pbedg.log"


def add_file_handler(
    file: Path | None = None,
    logger: logging.Logger = logging.getLogger(),
    fmt: logging.Formatter = _DEFAULT_FORMATTER,
    level=logging.DEBUG,
):
    """Configure and add a file handler to the specified logger.

    If a handler with the same output file already exists on the logger, replace it.

    Args:
        file: The file to log to. Defaults to a file at `~/.pbedg/logs/pbedg.log`.
        logger: The logger to add the handler to. Defaults to the root logger.
        fmt: The format string to use for the log messages on the new handler.
        level: The level to set the handler to. Defaults to DEBUG.
    """

    if file is None:
        file = default_log_file()
    file.parent.mkdir(parents=True, exist_ok=True)

    handler = RotatingFileHandler(file, maxBytes=10485760, backupCount=5)
    handler.setFormatter(fmt)
    handler.setLevel(level)

    # Find the handlers with the same file as the one we're adding, if any, and remove it.
    existing = []
    for h in logger.handlers:
        if isinstance(h, logging.FileHandler) and h.baseFilename == handler.baseFilename:
            existing.append(h)
    for h in existing:
        logger.removeHandler(h)
        h.close()
        logger.debug(f"Removed existing file handler: {h}")

    logger.addHandler(handler)
    logger.debug(f"Added file handler to handlers: {logger.handlers}")
    return handler


def configure_logging(level: str | int = "INFO", file: Path | None = None) -> None:
    """Console logging at ``level`` for command line use, plus a rotating log file if given."""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    console = [
        h
        for h in root.handlers
        if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)
    ]
    if not console:
        stream = logging.StreamHandler()
        stream.setFormatter(_CONSOLE_FORMATTER)
        root.addHandler(stream)
        console = [stream]
    for h in console:
        h.setLevel(level.upper() if isinstance(level, str) else level)
    if file is not None:
        add_file_handler(file, root)
