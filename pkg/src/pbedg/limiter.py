# Copyright pbe-dg contributors. All Rights Reserved.

"""Scaling limiter that pulls each cell polynomial toward its average until it is nonnegative."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from .basis import DGState, legendre_vandermonde
from .mesh import QuadratureRule

_logger = logging.getLogger(__name__)

_SAMPLES = 64
# Absolute margin, in units of eps * sum_i |n^i|, kept between the limited minimum and 0 so that
# the limited values stay nonnegative after rounding.
_ROUNDOFF_MARGIN = 8.0 * np.finfo(float).eps


class LimiterMode(str, enum.Enum):
    FULL = "full"
    GAUSS_ONLY = "gauss_only"


@dataclass(frozen=True, eq=False)
class LimiterReport:
    """Outcome of one limiter pass.

    Attributes:
        thetas: per-cell scaling factors in [0, 1].
        mode: where the minimum was tested.
        skipped: cells with a negative average, left untouched.
    """

    thetas: np.ndarray = field(repr=False)
    mode: LimiterMode
    skipped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def touched(self) -> int:
        return int(np.count_nonzero(self.thetas < 1.0))

    @property
    def min_theta(self) -> float:
        return float(np.min(self.thetas)) if self.thetas.size else 1.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "touched": self.touched,
            "min_theta": self.min_theta,
            "skipped": [int(j) for j in self.skipped],
        }


def _gauss_minimum(coeffs: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    values = coeffs @ legendre_vandermonde(rule.nodes, coeffs.shape[1] - 1).T
    return values.min(axis=1)


def _low_degree_minimum(coeffs: np.ndarray) -> np.ndarray:
    degree = coeffs.shape[1] - 1
    padded = np.zeros((coeffs.shape[0], 3))
    padded[:, : degree + 1] = coeffs
    c0, c1, c2 = padded.T
    candidates = [c0 - c1 + c2, c0 + c1 + c2]
    # p(xi) = c0 + c1 xi + c2 (3 xi^2 - 1) / 2 has its critical point at xi = -c1 / (3 c2).
    with np.errstate(divide="ignore", invalid="ignore"):
        critical = np.where(c2 != 0.0, -c1 / (3.0 * c2), 2.0)
    inside = np.abs(critical) < 1.0
    at_critical = c0 + c1 * critical + c2 * (1.5 * critical * critical - 0.5)
    candidates.append(np.where(inside, at_critical, np.inf))
    return np.min(np.stack(candidates), axis=0)


def _sampled_minimum(coeffs: np.ndarray) -> np.ndarray:
    samples = np.cos(np.pi * (np.arange(_SAMPLES) + 0.5) / _SAMPLES)
    samples = np.concatenate([[-1.0, 1.0], samples])
    values = coeffs @ legendre_vandermonde(samples, coeffs.shape[1] - 1).T
    best = samples[np.argmin(values, axis=1)]
    minimum = values.min(axis=1)

    slope = np.stack([legendre.legval(x, legendre.legder(c)) for x, c in zip(best, coeffs)])
    curvature = np.stack([legendre.legval(x, legendre.legder(c, 2)) for x, c in zip(best, coeffs)])
    with np.errstate(divide="ignore", invalid="ignore"):
        refined = np.clip(best - slope / curvature, -1.0, 1.0)
    usable = curvature > 0.0
    refined_values = np.array([legendre.legval(x, c) for x, c in zip(refined, coeffs)])
    return np.where(usable, np.minimum(minimum, refined_values), minimum)


def cell_minima(coeffs: np.ndarray, rule: QuadratureRule, mode: LimiterMode) -> np.ndarray:
    """Tested minimum of every cell polynomial."""
    if mode is LimiterMode.GAUSS_ONLY:
        return _gauss_minimum(coeffs, rule)
    if coeffs.shape[1] <= 3:
        return _low_degree_minimum(coeffs)
    return _sampled_minimum(coeffs)


def limit_state(
    state: DGState, rule: QuadratureRule, mode: LimiterMode = LimiterMode.GAUSS_ONLY
) -> tuple[DGState, LimiterReport]:
    """Applies n~_h = theta (n_h - nbar) + nbar cell by cell.

    theta = min(1, nbar / (nbar - min n_h)) with the minimum tested on the Gauss points of the
    cell (``gauss_only``) or on the whole cell (``full``). Only coefficients i >= 1 are scaled, so
    averages are preserved exactly. Cells with a negative average are skipped and reported.

    Returns:
        tuple[DGState, LimiterReport]: the limited state and the per-cell factors.
    """
    mode = LimiterMode(mode)
    coeffs = state.coeffs
    averages = coeffs[:, 0]
    thetas = np.ones(coeffs.shape[0])
    skipped = np.flatnonzero(averages < 0.0)
    if coeffs.shape[1] == 1:
        return state, LimiterReport(thetas=thetas, mode=mode, skipped=skipped)

    minima = cell_minima(coeffs, rule, mode)
    active = (minima < 0.0) & (averages >= 0.0)
    if np.any(active):
        margin = _ROUNDOFF_MARGIN * np.abs(coeffs[active]).sum(axis=1)
        room = np.clip(averages[active] - margin, 0.0, None)
        thetas[active] = np.clip(room / (averages[active] - minima[active]), 0.0, 1.0)
        coeffs = coeffs.copy()
        coeffs[active, 1:] *= thetas[active, None]
        state = state.with_coeffs(coeffs)
        _logger.debug(
            "Limiter touched %d cells, min theta %.6g", int(np.sum(thetas < 1.0)), thetas.min()
        )
    if skipped.size:
        _logger.warning("Limiter skipped %d cells with negative averages", skipped.size)
    return state, LimiterReport(thetas=thetas, mode=mode, skipped=skipped)
