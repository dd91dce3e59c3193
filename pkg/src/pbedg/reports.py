# Copyright pbe-dg contributors. All Rights Reserved.

"""Writers for run artifacts: solution profiles, run reports, convergence tables and moments."""

from __future__ import annotations

import json
import logging
import os
from typing import Any, Callable, Sequence

import numpy as np
import pandas as pd

from .basis import DGState, PointSampler
from .diagnostics import ERROR_ORDER, EOCTable
from .mesh import Mesh, gauss_points, gauss_rule

_logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.16e"
CSV_LINE_TERMINATOR = "\r\n"


def profile_frame(
    state: DGState,
    mesh: Mesh,
    reference: Callable[[np.ndarray], np.ndarray] | None = None,
    order: int = ERROR_ORDER,
) -> pd.DataFrame:
    """n_h and the reference sampled at ``order`` Gauss points per cell, all with x > 0."""
    rule = gauss_rule(order)
    points = gauss_points(mesh, rule)
    cells = np.broadcast_to(np.arange(mesh.n_cells)[:, None], points.shape)
    values = PointSampler.create(mesh, points, state.degree, cells=cells)(state.coeffs)
    if reference is None:
        exact = np.full(points.shape, np.nan)
    else:
        exact = np.asarray(reference(points), dtype=float)
    return pd.DataFrame(
        {
            "x": points.ravel(),
            "n_h": values.ravel(),
            "reference": exact.ravel(),
            "cell_index": cells.ravel(),
        }
    )


def emit_profile(
    state: DGState,
    mesh: Mesh,
    path: str,
    reference: Callable[[np.ndarray], np.ndarray] | None = None,
    order: int = ERROR_ORDER,
) -> str:
    """Writes the profile CSV (x, n_h, reference, cell_index); the reference column is empty
    when no reference is given.

    Raises:
        OSError: if the file cannot be written.
    """
    frame = profile_frame(state, mesh, reference, order)
    frame.to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT,
        na_rep="",
        lineterminator=CSV_LINE_TERMINATOR,
    )
    _logger.info("Wrote profile at t=%g to %s", state.time, path)
    return path


def write_json(document: Any, path: str) -> str:
    with open(path, "w", encoding="utf-8") as report_file:
        json.dump(document, report_file, indent=2, sort_keys=True, allow_nan=False, default=_plain)
        report_file.write("\n")
    _logger.info("Wrote %s", path)
    return path


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def finite_or_none(value: float | None) -> float | None:
    """JSON has no NaN or infinity; such values are written as null."""
    if value is None or not np.isfinite(value):
        return None
    return float(value)


def write_eoc_tables(tables: Sequence[EOCTable], out_dir: str, case_id: str) -> list[str]:
    """Writes eoc_<case>.md with one table per degree and eoc_<case>.csv with all rows."""
    if not tables:
        return []
    markdown_path = os.path.join(out_dir, f"eoc_{case_id}.md")
    with open(markdown_path, "w", encoding="utf-8") as markdown_file:
        markdown_file.write("\n".join(table.to_markdown() for table in tables))
    csv_path = os.path.join(out_dir, f"eoc_{case_id}.csv")
    frames = [table.frame.assign(k=table.degree) for table in tables]
    pd.concat(frames, ignore_index=True).to_csv(
        csv_path,
        index=False,
        float_format=FLOAT_FORMAT,
        na_rep="",
        lineterminator=CSV_LINE_TERMINATOR,
    )
    _logger.info("Wrote convergence tables to %s and %s", markdown_path, csv_path)
    return [markdown_path, csv_path]


def profile_name(case_id: str, n_cells: int, degree: int, label: str) -> str:
    return f"profile_{case_id}_N{n_cells}_k{degree}_{label}.csv"
