# Copyright pbe-dg contributors. All Rights Reserved.

import argparse
import logging
import sys
from pathlib import Path

from ..cases import case_ids
from ..config import OUT_DIR_ENV, load_request, resolve_out_dir
from ..logutil import configure_logging
from ..runner import run_case
from ..timeloop import SspMethod

__all__ = ["build_parser", "main"]
_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_THRESHOLDS_UNMET = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbedg",
        description="Run population balance benchmark cases with the positivity preserving "
        "DG solver and write errors, convergence tables, moments and profiles.",
    )
    parser.add_argument("--config", help="JSON configuration file; flags override its values")
    parser.add_argument("--case", choices=case_ids(), help="benchmark case")
    parser.add_argument("--N", type=int, nargs="+", dest="N", help="numbers of cells")
    parser.add_argument("--k", type=int, nargs="+", dest="k", help="polynomial degrees")
    parser.add_argument("--Q", type=int, dest="Q", help="flux quadrature order, default k + 1")
    parser.add_argument("--t-end", type=float, dest="t_end", help="final time")
    parser.add_argument("--dt", type=float, help="initial time step")
    parser.add_argument("--rk", choices=[m.value for m in SspMethod], help="time integration")
    parser.add_argument("--limiter", choices=["on", "off"], help="positivity limiter")
    parser.add_argument(
        "--out", help=f"output directory, defaults to ${OUT_DIR_ENV} or ./pbedg-out"
    )
    parser.add_argument("--jobs", type=int, help="parallel worker processes")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="console log level",
    )
    parser.add_argument("--log-file", type=Path, help="also log to this rotating file")
    return parser


def main(argv=None) -> int:
    """Entrypoint for the pbedg command.

    Returns:
        int: 0 on success, 1 on errors or failed runs, 2 if acceptance thresholds are unmet.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None and args.case is None:
        parser.error("either --config or --case is required")
    configure_logging(args.log_level, args.log_file)

    overrides = {
        "case": args.case,
        "N": args.N,
        "k": args.k,
        "Q": args.Q,
        "t_end": args.t_end,
        "dt": args.dt,
        "rk": args.rk,
        "limiter": None if args.limiter is None else args.limiter == "on",
        "jobs": args.jobs,
    }
    try:
        request = load_request(args.config, overrides)
        report = run_case(request, resolve_out_dir(args.out))
    except Exception as e:
        _logger.error(f"pbedg failed: {e}")
        return EXIT_ERROR

    if report.failed_runs:
        for run in report.failed_runs:
            _logger.error(f"Run N={run.n_cells} k={run.degree} failed: {run.failure}")
        return EXIT_ERROR
    for check in report.checks:
        log = _logger.info if check.passed else _logger.error
        log(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
    if not report.passed:
        return EXIT_THRESHOLDS_UNMET
    _logger.info("Done pbedg main")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
