# Copyright pbe-dg contributors. All Rights Reserved.

"""Error norms, convergence orders, moments and the residual check for reference solutions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from .analytic import AnalyticSolution
from .basis import DGState, PointSampler
from .exceptions import InvalidArgumentError, OracleFailureError
from .kernels import KernelSet
from .mesh import Mesh, QuadratureRule, gauss_points, gauss_rule

_logger = logging.getLogger(__name__)

Reference = Callable[[np.ndarray], np.ndarray]

ERROR_ORDER = 16
MOMENT_ORDERS = 6
RESIDUAL_UPPER = 200.0
RESIDUAL_EPSREL = 1e-9
_RESIDUAL_EPSABS = 1e-13
_RESIDUAL_LIMIT = 200


def _sampled(state: DGState, mesh: Mesh, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    points = gauss_points(mesh, rule)
    cells = np.arange(mesh.n_cells)[:, None]
    return points, PointSampler.create(mesh, points, state.degree, cells=cells)(state.coeffs)


def _cell_errors(
    state: DGState, reference: Reference, mesh: Mesh, rule: QuadratureRule
) -> np.ndarray:
    points, values = _sampled(state, mesh, rule)
    exact = np.asarray(reference(points), dtype=float)
    return 0.5 * mesh.widths * (np.abs(values - exact) @ rule.weights)


def error_continuous(
    state: DGState, reference: Reference, mesh: Mesh, order: int = ERROR_ORDER
) -> float:
    """L1 error e_h approximated with an ``order``-point Gauss rule in every cell."""
    return float(np.sum(_cell_errors(state, reference, mesh, gauss_rule(order))))


def error_discrete(
    state: DGState, reference: Reference, mesh: Mesh, rule: QuadratureRule
) -> float:
    """Discrete L1 error e_hd on the Gauss points used by the scheme."""
    return float(np.sum(_cell_errors(state, reference, mesh, rule)))


@dataclass(frozen=True)
class ErrorReport:
    time: float
    e_h: float
    e_hd: float
    per_cell: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"time": self.time, "e_h": self.e_h, "e_hd": self.e_hd}


def error_report(
    state: DGState,
    reference: Reference,
    mesh: Mesh,
    rule: QuadratureRule,
    order: int = ERROR_ORDER,
) -> ErrorReport:
    per_cell = _cell_errors(state, reference, mesh, gauss_rule(order))
    return ErrorReport(
        time=state.time,
        e_h=float(per_cell.sum()),
        e_hd=error_discrete(state, reference, mesh, rule),
        per_cell=per_cell,
    )


def eoc(errors: Sequence[float] | np.ndarray) -> np.ndarray:
    """Orders ln(e_i / e_{i+1}) / ln 2 between successive mesh doublings.

    Raises:
        InvalidArgumentError: for fewer than two entries or a nonpositive entry.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or errors.size < 2:
        raise InvalidArgumentError("at least two errors are needed for a convergence order")
    if not np.all(errors > 0.0):
        raise InvalidArgumentError(f"errors must be positive, got {errors.tolist()}")
    return np.log(errors[:-1] / errors[1:]) / math.log(2.0)


def self_error(
    coarse: DGState,
    fine: DGState,
    coarse_mesh: Mesh,
    fine_mesh: Mesh,
    order: int = ERROR_ORDER,
) -> float:
    """L1 distance between two solutions, sampled on the Gauss points of the coarse mesh.

    The fine solution is evaluated exactly at the coarse points, so no interpolation error
    enters. Geometric meshes with 2N cells reach further than those with N cells; the distance
    is measured on the coarse domain only.

    Raises:
        InvalidArgumentError: if the fine mesh does not cover the coarse domain.
    """
    if fine_mesh.length < coarse_mesh.length * (1.0 - 1e-12):
        raise InvalidArgumentError(
            f"domains differ: L={coarse_mesh.length!r} is not covered by L={fine_mesh.length!r}"
        )
    rule = gauss_rule(order)
    points, values = _sampled(coarse, coarse_mesh, rule)
    fine_values = PointSampler.create(fine_mesh, points, fine.degree)(fine.coeffs)
    per_cell = 0.5 * coarse_mesh.widths * (np.abs(values - fine_values) @ rule.weights)
    return float(per_cell.sum())


@dataclass(frozen=True)
class EOCTable:
    """Errors over successive mesh doublings with the orders between consecutive rows.

    ``frame`` has the columns N, e_h, eoc_h and, when discrete errors are given, e_hd and
    eoc_hd. The order columns are NaN on the first row.
    """

    label: str
    degree: int
    frame: pd.DataFrame = field(repr=False)

    @classmethod
    def from_errors(
        cls,
        label: str,
        degree: int,
        n_cells: Sequence[int],
        e_h: Sequence[float],
        e_hd: Sequence[float] | None = None,
    ) -> EOCTable:
        if len(n_cells) != len(e_h) or (e_hd is not None and len(e_hd) != len(e_h)):
            raise InvalidArgumentError("every row needs N and its errors")
        columns: dict[str, Sequence[float] | np.ndarray] = {"N": list(n_cells), "e_h": e_h}
        columns["eoc_h"] = _orders(e_h)
        if e_hd is not None:
            columns["e_hd"] = e_hd
            columns["eoc_hd"] = _orders(e_hd)
        return cls(label=label, degree=degree, frame=pd.DataFrame(columns))

    @property
    def finest_eoc(self) -> float:
        return float(self.frame["eoc_h"].iloc[-1])

    @property
    def finest_discrete_eoc(self) -> float:
        if "eoc_hd" not in self.frame:
            return math.nan
        return float(self.frame["eoc_hd"].iloc[-1])

    def to_dict(self) -> dict:
        rows = self.frame.to_dict(orient="records")
        return {
            "label": self.label,
            "k": self.degree,
            "rows": [
                {key: None if _missing(value) else value for key, value in row.items()}
                for row in rows
            ],
        }

    def to_markdown(self) -> str:
        headers = ["N", "e_h", "EOC"]
        discrete = "e_hd" in self.frame
        if discrete:
            headers += ["e_hd", "EOC"]
        lines = [
            f"### {self.label}, k = {self.degree}",
            "",
            "| " + " | ".join(headers) + " |",
            "|" + "|".join("---:" for _ in headers) + "|",
        ]
        for row in self.frame.itertuples(index=False):
            cells = [str(row.N), f"{row.e_h:.2e}", _format_order(row.eoc_h)]
            if discrete:
                cells += [f"{row.e_hd:.2e}", _format_order(row.eoc_hd)]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _orders(errors: Sequence[float]) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    orders = np.full(errors.shape, np.nan)
    if errors.size >= 2 and np.all(errors > 0.0):
        orders[1:] = eoc(errors)
    return orders


def _missing(value: object) -> bool:
    return isinstance(value, float) and not math.isfinite(value)


def _format_order(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.2f}"


@dataclass(frozen=True)
class MomentReport:
    """Moments M_p = int x^(p-1) n dx of a solution, p = 0, 1, ...

    Attributes:
        time: time of the state.
        values: M_{p,h} for p = 0..p_max.
        errors: relative errors against reference moments, NaN where none is known.
        aggregation_degree: I_agg = 1 - M_0(t) / M_0(0) when the initial M_0 is known.
    """

    time: float
    values: np.ndarray
    errors: np.ndarray
    aggregation_degree: float | None = None

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "moments": {f"M{p}": float(v) for p, v in enumerate(self.values)},
            "relative_errors": {
                f"M{p}": float(e) for p, e in enumerate(self.errors) if not math.isnan(e)
            },
            "aggregation_degree": self.aggregation_degree,
        }


def moments(
    state: DGState,
    mesh: Mesh,
    p_max: int = MOMENT_ORDERS - 1,
    order: int = ERROR_ORDER,
    initial_zeroth: float | None = None,
    reference: Sequence[float | None] | None = None,
) -> MomentReport:
    """Moments M_{p,h} = sum_j (h_j / 2) sum_a w_a x_a^(p-1) n_h(x_a) for p = 0..p_max.

    Args:
        initial_zeroth: M_{0,h}(0), enables the degree of aggregation.
        reference: reference moments by p; entries may be None.
    """
    if p_max < 0:
        raise InvalidArgumentError(f"p_max must be >= 0, got {p_max}")
    rule = gauss_rule(order)
    points, values = _sampled(state, mesh, rule)
    weighted = 0.5 * mesh.widths[:, None] * rule.weights[None, :] * values
    powers = np.arange(p_max + 1) - 1.0
    moment_values = np.array([np.sum(weighted * points**p) for p in powers])

    errors = np.full(p_max + 1, np.nan)
    for p, expected in enumerate(reference or ()):
        if p <= p_max and expected is not None and expected != 0.0:
            errors[p] = abs(moment_values[p] - expected) / abs(expected)
    aggregation = None
    if initial_zeroth:
        aggregation = float(1.0 - moment_values[0] / initial_zeroth)
    return MomentReport(
        time=state.time, values=moment_values, errors=errors, aggregation_degree=aggregation
    )


def reference_moments(
    reference: Reference, mesh: Mesh, p_max: int = MOMENT_ORDERS - 1, order: int = ERROR_ORDER
) -> np.ndarray:
    """Moments of a reference mass density over the mesh, with the rule used by ``moments``."""
    rule = gauss_rule(order)
    points = gauss_points(mesh, rule)
    values = np.asarray(reference(points), dtype=float)
    weighted = 0.5 * mesh.widths[:, None] * rule.weights[None, :] * values
    return np.array([np.sum(weighted * points ** (p - 1.0)) for p in range(p_max + 1)])


def _quad(function: Callable[[float], float], lower: float, upper: float, what: str) -> float:
    if upper <= lower:
        return 0.0
    result = integrate.quad(
        function,
        lower,
        upper,
        epsabs=_RESIDUAL_EPSABS,
        epsrel=RESIDUAL_EPSREL,
        limit=_RESIDUAL_LIMIT,
        full_output=1,
    )
    if len(result) >= 4:
        raise OracleFailureError(f"quadrature of the {what} term did not converge", result[3])
    return float(result[0])


def _time_derivative(solution: AnalyticSolution, t: float, x: float) -> float:
    step = 1e-4 * max(t, 1.0)

    def f(s: float) -> float:
        return float(solution.number_density(s, x))

    if t - 2.0 * step >= 0.0 and t + 2.0 * step <= solution.t_max:
        return (f(t - 2 * step) - 8 * f(t - step) + 8 * f(t + step) - f(t + 2 * step)) / (
            12.0 * step
        )
    # One-sided five-point stencils at the ends of the validity window.
    sign = 1.0 if t - 2.0 * step < 0.0 else -1.0
    h = sign * step
    samples = [f(t + i * h) for i in range(5)]
    weights = (-25.0, 48.0, -36.0, 16.0, -3.0)
    return sum(w * v for w, v in zip(weights, samples)) / (12.0 * h)


def pde_rhs(
    solution: AnalyticSolution, kernel_set: KernelSet, t: float, x: float, upper: float
) -> float:
    """Right side of the number density equation at (t, x), integrals cut off at ``upper``."""

    def f(y: float) -> float:
        return float(solution.number_density(t, y))

    total = 0.0
    if kernel_set.aggregation is not None:
        kernel = kernel_set.aggregation

        def birth(y: float) -> float:
            return float(kernel(np.asarray(x - y), np.asarray(y))) * f(x - y) * f(y)

        def death(y: float) -> float:
            return float(kernel(np.asarray(x), np.asarray(y))) * f(y)

        total += 0.5 * _quad(birth, 0.0, x, "aggregation birth")
        total -= f(x) * _quad(death, 0.0, upper, "aggregation death")
    if kernel_set.breakage is not None and kernel_set.selection is not None:
        breakage, selection = kernel_set.breakage, kernel_set.selection

        def fragments(y: float) -> float:
            daughters = float(breakage(np.asarray(x), np.asarray(y)))
            return daughters * float(selection(np.asarray(y))) * f(y)

        total += _quad(fragments, x, upper, "breakage birth")
        total -= float(selection(np.asarray(x))) * f(x)
    return total


def pde_residual(
    solution: AnalyticSolution,
    kernel_set: KernelSet,
    t: float,
    x: float,
    upper: float = RESIDUAL_UPPER,
) -> float:
    """|d_t f - rhs(f)| at (t, x) for a candidate reference solution.

    The time derivative uses five-point differences with step 1e-4 max(t, 1); the integrals are
    evaluated adaptively on [0, ``upper``].

    Raises:
        OracleFailureError: if an integral does not converge.
        ValidityWindowError: if t is outside the window of the solution.
    """
    if not 0.0 < x < upper:
        raise InvalidArgumentError(f"x must lie in (0, {upper}), got {x}")
    residual = abs(_time_derivative(solution, t, x) - pde_rhs(solution, kernel_set, t, x, upper))
    _logger.debug("Residual of %s at t=%g, x=%g: %.3e", solution.case_id, t, x, residual)
    return residual
