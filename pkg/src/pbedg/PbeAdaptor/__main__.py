# Copyright pbe-dg contributors. All Rights Reserved.

"""OpenJD entry point that serves ``PbeAdaptor`` tasks, one (N, k) run per task."""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

from openjd.adaptor_runtime import EntryPoint

from ..logutil import configure_logging
from .adaptor import PbeAdaptor

__all__ = ["main"]
_logger = logging.getLogger("pbedg.PbeAdaptor")

LOG_LEVEL_VARIABLE = "PBEDG_LOG_LEVEL"
LOG_FILE_VARIABLE = "PBEDG_LOG_FILE"


def main(reentry_exe: Path | None = None) -> int:
    """Starts the adaptor runtime with console logging for the solver.

    The console level comes from ``PBEDG_LOG_LEVEL`` (default INFO); ``PBEDG_LOG_FILE`` adds a
    rotating log file.

    Returns:
        int: 0 when the runtime exits normally, 1 when it raises.
    """
    if not __package__:
        raise RuntimeError(f"Must be run as a module. Do not run {__file__} directly")

    log_file = os.environ.get(LOG_FILE_VARIABLE)
    configure_logging(
        os.environ.get(LOG_LEVEL_VARIABLE, "INFO"), Path(log_file) if log_file else None
    )
    _logger.info("Starting the pbedg adaptor runtime")
    try:
        EntryPoint(PbeAdaptor).start(reentry_exe=reentry_exe)
    except Exception:
        _logger.exception("Adaptor runtime failed")
        return 1

    _logger.info("Adaptor runtime exited")
    return 0


if __name__ == "__main__":
    sys.exit(main())
