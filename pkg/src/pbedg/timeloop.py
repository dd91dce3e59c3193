# Copyright pbe-dg contributors. All Rights Reserved.

"""Time integration: projection of the initial data and SSP Runge–Kutta steps with halving."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import DGState, MassDensity, project_initial, total_mass
from .exceptions import (
    DivergedStateError,
    InvalidArgumentError,
    NonconvergenceError,
    UnresolvableInitialDataError,
)
from .limiter import LimiterMode, LimiterReport, limit_state
from .mesh import Mesh, QuadratureRule
from .scheme import SchemeContext, assemble_rhs, cfl_max_dt

_logger = logging.getLogger(__name__)

_TIME_TOLERANCE = 1e-12
# Negative cell masses below this fraction of the total mass are round-off and set to zero.
_ROUNDOFF_MASS = 8.0 * np.finfo(float).eps


class SspMethod(str, enum.Enum):
    EULER = "euler"
    SSP_RK2 = "ssp_rk2"
    SSP_RK3 = "ssp_rk3"


_STAGE_WEIGHTS: dict[SspMethod, tuple[tuple[float, ...], ...]] = {
    SspMethod.EULER: ((1.0,),),
    SspMethod.SSP_RK2: ((1.0,), (0.5, 0.5)),
    SspMethod.SSP_RK3: ((1.0,), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0)),
}


def ssp_stage_weights(method: SspMethod | str) -> tuple[tuple[float, ...], ...]:
    """Shu–Osher rows of an SSP Runge–Kutta method.

    Row 0 has the single weight of the first Euler step from u^0. A row (a, b) forms the next
    stage as a * u^0 + b * Euler(u^(i-1)).

    Raises:
        InvalidArgumentError: for an unknown method.
    """
    try:
        return _STAGE_WEIGHTS[SspMethod(method)]
    except ValueError:
        raise InvalidArgumentError(f"Unsupported time integration method: {method}") from None


def ssp_step(
    u0: np.ndarray,
    dt: float,
    rhs: Callable[[np.ndarray], np.ndarray],
    method: SspMethod | str,
    post_stage: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """One SSP Runge–Kutta step as convex combinations of forward Euler steps.

    ``post_stage`` is applied to every stage value, e.g. a limiter or an admissibility check.
    """
    stage = u0
    for row in ssp_stage_weights(method):
        euler = stage + dt * rhs(stage)
        stage = euler if len(row) == 1 else row[0] * u0 + row[1] * euler
        if post_stage is not None:
            stage = post_stage(stage)
    return stage


@dataclass(frozen=True)
class RunConfig:
    """Time loop settings.

    Attributes:
        t_end: final time.
        dt_initial: first time step.
        method: SSP Runge–Kutta method.
        limiter_enabled: apply the limiter after every stage.
        limiter_mode: where the limiter tests for negative values.
        use_cfl_bound: cap every step by ``cfl_safety`` times the positivity bound.
        cfl_safety: safety factor applied to the positivity bound.
        max_halvings: halvings allowed within one step before giving up.
        output_times: times at which the state is recorded; steps are shortened to hit them.
        allow_regrowth: double the step after ``regrowth_after`` clean steps, up to dt_initial.
        regrowth_after: number of clean steps before the step is doubled.
    """

    t_end: float
    dt_initial: float
    method: SspMethod = SspMethod.EULER
    limiter_enabled: bool = True
    limiter_mode: LimiterMode = LimiterMode.GAUSS_ONLY
    use_cfl_bound: bool = False
    cfl_safety: float = 0.99
    max_halvings: int = 40
    output_times: tuple[float, ...] = ()
    allow_regrowth: bool = False
    regrowth_after: int = 50

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", SspMethod(self.method))
        object.__setattr__(self, "limiter_mode", LimiterMode(self.limiter_mode))
        object.__setattr__(self, "output_times", tuple(float(t) for t in self.output_times))
        if not self.t_end > 0.0:
            raise InvalidArgumentError(f"t_end must be positive, got {self.t_end}")
        if not self.dt_initial > 0.0:
            raise InvalidArgumentError(f"dt_initial must be positive, got {self.dt_initial}")
        if self.max_halvings < 1:
            raise InvalidArgumentError(f"max_halvings must be >= 1, got {self.max_halvings}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise InvalidArgumentError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.regrowth_after < 1:
            raise InvalidArgumentError("regrowth_after must be >= 1")


@dataclass(frozen=True)
class HalvingEvent:
    time: float
    old_dt: float
    reason: str

    def to_dict(self) -> dict:
        return {"time": self.time, "old_dt": self.old_dt, "reason": self.reason}


@dataclass(frozen=True)
class MassSample:
    """Mass M_1 on the domain and the mass that left through the right boundary so far."""

    time: float
    mass: float
    outflow: float

    def to_dict(self) -> dict:
        return {"time": self.time, "mass": self.mass, "outflow": self.outflow}


@dataclass
class RunTrace:
    steps: int = 0
    halvings: list[HalvingEvent] = field(default_factory=list)
    limiter_reports: dict[float, LimiterReport] = field(default_factory=dict)
    mass_ledger: list[MassSample] = field(default_factory=list)
    outputs: dict[float, DGState] = field(default_factory=dict, repr=False)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        """Serializable summary; wall-time is left out so reports are reproducible."""
        return {
            "steps": self.steps,
            "halvings": [event.to_dict() for event in self.halvings],
            "limiter": {
                f"{t:.17g}": report.to_dict() for t, report in self.limiter_reports.items()
            },
            "mass_ledger": [sample.to_dict() for sample in self.mass_ledger],
        }


class _StageRejected(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def initialize(
    n0: MassDensity,
    mesh: Mesh,
    degree: int,
    rule: QuadratureRule,
    limiter_enabled: bool = True,
    limiter_mode: LimiterMode = LimiterMode.GAUSS_ONLY,
) -> DGState:
    """Projects the initial mass density and applies the limiter once.

    A trailing run of cells with zero average, where the data underflow, is accepted.

    Raises:
        UnresolvableInitialDataError: if a cell average is negative, or zero with a cell of
            positive average to its right.
    """
    state = project_initial(n0, mesh, degree)
    averages = state.coeffs[:, 0]
    positive = np.flatnonzero(averages > 0.0)
    if positive.size == 0:
        raise UnresolvableInitialDataError(
            "initial data vanish on every cell", range(mesh.n_cells)
        )
    hole = (averages == 0.0) & (np.arange(mesh.n_cells) < positive[-1])
    bad = np.flatnonzero((averages < 0.0) | hole)
    if bad.size:
        raise UnresolvableInitialDataError(
            f"initial data not resolved on {bad.size} cells, first {int(bad[0])}",
            [int(j) for j in bad],
        )
    tail = mesh.n_cells - 1 - int(positive[-1])
    if tail:
        _logger.debug("Initial data underflow to zero on the last %d cells", tail)
    if limiter_enabled:
        state, report = limit_state(state, rule, limiter_mode)
        if report.touched:
            _logger.info("Initial limiter pass touched %d cells", report.touched)
    return state


def _stage_check(
    context: SchemeContext, config: RunConfig, reports: list[LimiterReport]
) -> Callable[[np.ndarray], np.ndarray]:
    n_cells, width = context.mesh.n_cells, context.degree + 1
    widths = context.mesh.widths

    def check(vector: np.ndarray) -> np.ndarray:
        coeffs = vector[:-1].reshape(n_cells, width)
        if not np.all(np.isfinite(vector)):
            raise _StageRejected("non-finite stage value")
        cell_mass = coeffs[:, 0] * widths
        roundoff = (cell_mass < 0.0) & (-cell_mass <= _ROUNDOFF_MASS * np.abs(cell_mass).sum())
        if np.any(roundoff):
            coeffs = coeffs.copy()
            coeffs[roundoff] = 0.0
            vector = np.append(coeffs.ravel(), vector[-1])
        negative = np.flatnonzero(coeffs[:, 0] < 0.0)
        if negative.size:
            raise _StageRejected(f"negative average in cell {int(negative[0])}")
        if not config.limiter_enabled:
            return vector
        limited, report = limit_state(DGState(coeffs), context.rule, config.limiter_mode)
        reports.append(report)
        if report.skipped.size:
            raise _StageRejected(f"limiter skipped cell {int(report.skipped[0])}")
        return np.append(limited.coeffs.ravel(), vector[-1])

    return check


def _rhs(context: SchemeContext) -> Callable[[np.ndarray], np.ndarray]:
    n_cells, width = context.mesh.n_cells, context.degree + 1

    def rhs(vector: np.ndarray) -> np.ndarray:
        evaluation = assemble_rhs(DGState(vector[:-1].reshape(n_cells, width)), context)
        return np.append(evaluation.dcoeffs.ravel(), evaluation.interface_fluxes[-1])

    return rhs


def advance(
    state: DGState,
    config: RunConfig,
    context: SchemeContext,
    on_step: Callable[[DGState], None] | None = None,
) -> tuple[DGState, RunTrace]:
    """Advances ``state`` to ``config.t_end``.

    Every step is attempted with the current time step; if a stage produces a negative average,
    a non-finite value or a diverged flux, the step is halved and retried. The step stays at the
    reduced value afterwards unless ``allow_regrowth`` is set.
    Negative averages whose cell mass is within round-off of the total mass are set to zero
    instead.

    Args:
        state: state at the start time.
        config: time loop settings.
        context: mesh, rule, kernels and flux tables.
        on_step: called with every accepted state.

    Raises:
        NonconvergenceError: when a step needs more than ``config.max_halvings`` halvings.
    """
    if not state.time < config.t_end:
        raise InvalidArgumentError(f"state time {state.time} is not before t_end {config.t_end}")
    started = time.perf_counter()
    trace = RunTrace()
    targets = run_times(config, state.time)
    rhs = _rhs(context)
    reports: list[LimiterReport] = []
    check = _stage_check(context, config, reports)

    outflow = 0.0
    trace.mass_ledger.append(MassSample(state.time, total_mass(state, context.mesh), outflow))
    dt = config.dt_initial
    clean_steps = 0
    current = state
    for target in targets:
        while current.time < target:
            step_dt = min(dt, target - current.time)
            if config.use_cfl_bound:
                bound = config.cfl_safety * cfl_max_dt(current, context)
                if bound < step_dt:
                    step_dt = bound
                if not step_dt > 0.0:
                    raise NonconvergenceError(
                        f"positivity bound vanished at t={current.time!r}", trace
                    )
            halvings = 0
            while True:
                reports.clear()
                try:
                    vector = ssp_step(
                        np.append(current.coeffs.ravel(), 0.0),
                        step_dt,
                        rhs,
                        config.method,
                        post_stage=check,
                    )
                    break
                except (_StageRejected, DivergedStateError) as exc:
                    reason = getattr(exc, "reason", str(exc))
                halvings += 1
                trace.halvings.append(HalvingEvent(current.time, step_dt, reason))
                _logger.debug("Halving dt=%g at t=%g: %s", step_dt, current.time, reason)
                if halvings > config.max_halvings:
                    trace.wall_time = time.perf_counter() - started
                    raise NonconvergenceError(
                        f"step at t={current.time!r} failed after {config.max_halvings} halvings",
                        trace,
                    )
                step_dt *= 0.5
                dt = min(dt, step_dt)
                clean_steps = 0

            new_time = current.time + step_dt
            if abs(target - new_time) <= _TIME_TOLERANCE * max(1.0, abs(target)):
                new_time = target
            coeffs = vector[:-1].reshape(current.coeffs.shape)
            current = DGState(coeffs=coeffs, time=new_time)
            outflow += float(vector[-1])
            trace.steps += 1
            if halvings == 0:
                clean_steps += 1
            if config.allow_regrowth and clean_steps >= config.regrowth_after:
                dt = min(2.0 * dt, config.dt_initial)
                clean_steps = 0
            if on_step is not None:
                on_step(current)

        trace.outputs[target] = current
        if reports:
            trace.limiter_reports[target] = reports[-1]
        trace.mass_ledger.append(MassSample(target, total_mass(current, context.mesh), outflow))
        _logger.info("Reached t=%g after %d steps", target, trace.steps)

    trace.wall_time = time.perf_counter() - started
    return current, trace


def run_times(config: RunConfig, start: float = 0.0) -> Sequence[float]:
    """Output times of a run in order, ending with t_end."""
    times = sorted({t for t in config.output_times if start < t < config.t_end})
    return [*times, config.t_end]


def steps_estimate(config: RunConfig, start: float = 0.0) -> int:
    return max(1, math.ceil((config.t_end - start) / config.dt_initial))
