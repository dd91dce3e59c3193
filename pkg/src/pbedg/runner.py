# Copyright pbe-dg contributors. All Rights Reserved.

"""Runs benchmark batteries: one solver run per (N, k), then errors, orders and artifacts."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import reports
from .analytic import AnalyticSolution
from .basis import DGState
from .cases import CaseSpec, get_case
from .config import RunRequest
from .diagnostics import (
    EOCTable,
    ErrorReport,
    MomentReport,
    error_report,
    moments,
    reference_moments,
    self_error,
)
from .exceptions import ConfigError, NonconvergenceError, PbeDgError
from .mesh import Mesh
from .scheme import SchemeContext
from .timeloop import RunTrace, advance, initialize

_logger = logging.getLogger(__name__)

REPORT_NAME = "runreport.json"


@dataclass
class RunResult:
    """Outcome of one (N, k) run.

    Attributes:
        errors: errors against the reference at t = 0 and at every output time.
        moments: moment reports at t = 0 and at every output time.
        failure: message of the error that stopped the run, None on success.
    """

    case_id: str
    n_cells: int
    degree: int
    quadrature_order: int
    mesh: Mesh
    initial: DGState | None = None
    state: DGState | None = None
    trace: RunTrace | None = None
    errors: list[ErrorReport] = field(default_factory=list)
    moments: list[MomentReport] = field(default_factory=list)
    failure: str | None = None
    profiles: list[str] = field(default_factory=list)

    @property
    def key(self) -> tuple[int, int]:
        return (self.n_cells, self.degree)

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def mass_drift(self) -> float:
        """|M_1(t) + outflow(t) - M_1(0)| / M_1(0) at the final time."""
        if self.trace is None or not self.trace.mass_ledger:
            return math.nan
        first, last = self.trace.mass_ledger[0], self.trace.mass_ledger[-1]
        return abs(last.mass + last.outflow - first.mass) / first.mass

    def to_dict(self) -> dict[str, Any]:
        document: dict[str, Any] = {
            "N": self.n_cells,
            "k": self.degree,
            "Q": self.quadrature_order,
            "status": "ok" if self.ok else "failed",
            "mesh": self.mesh.to_dict(),
            "mass_drift": reports.finite_or_none(self.mass_drift),
            "errors": [report.to_dict() for report in self.errors],
            "moments": [_moment_dict(report) for report in self.moments],
            "profiles": [os.path.basename(path) for path in self.profiles],
        }
        if self.failure is not None:
            document["failure"] = self.failure
        if self.trace is not None:
            document.update(self.trace.to_dict())
        return document


def _moment_dict(report: MomentReport) -> dict[str, Any]:
    document = report.to_dict()
    document["aggregation_degree"] = reports.finite_or_none(report.aggregation_degree)
    return document


def resolve_reference(case: CaseSpec, request: RunRequest) -> AnalyticSolution | None:
    """Reference solution for the errors, or None for self-convergence.

    Raises:
        ConfigError: if an analytic reference is requested for a case without one.
    """
    if request.reference == "self":
        return None
    reference = case.reference()
    if reference is None:
        if request.reference == "analytic":
            raise ConfigError(f"case {case.case_id} has no closed-form solution", "reference")
        _logger.warning(
            "No closed-form solution for case %s, using self-convergence", case.case_id
        )
    return reference


def run_single(
    request: RunRequest,
    n_cells: int,
    degree: int,
    out_dir: str | None = None,
    on_step: Callable[[DGState], None] | None = None,
) -> RunResult:
    """Runs one (N, k) simulation of ``request.case_id`` and evaluates it at every output time.

    Solver failures are recorded in the result; configuration errors are raised.
    """
    case = get_case(request.case_id)
    reference = resolve_reference(case, request)
    mesh = case.mesh(n_cells, request.x0, request.span_exponent)
    context = SchemeContext.create(
        mesh, case.kernel_set(request.case_params), degree, request.quadrature_order
    )
    result = RunResult(
        case_id=case.case_id,
        n_cells=n_cells,
        degree=degree,
        quadrature_order=context.rule.order,
        mesh=mesh,
    )
    _logger.info("Running case %s with N=%d, k=%d", case.case_id, n_cells, degree)
    try:
        initial = initialize(
            case.initial_density(request.case_params),
            mesh,
            degree,
            context.rule,
            request.limiter,
            request.limiter_mode,
        )
        result.initial = initial
        final, trace = advance(initial, request.run_config(), context, on_step)
    except NonconvergenceError as e:
        _logger.error("Case %s N=%d k=%d did not converge: %s", case.case_id, n_cells, degree, e)
        result.failure = str(e)
        result.trace = e.trace
        return result
    except PbeDgError as e:
        _logger.error("Case %s N=%d k=%d failed: %s", case.case_id, n_cells, degree, e)
        result.failure = f"{type(e).__name__}: {e}"
        return result
    result.state, result.trace = final, trace
    _logger.info(
        "Case %s N=%d k=%d advanced in %.2f s", case.case_id, n_cells, degree, trace.wall_time
    )

    outflows = {sample.time: sample.outflow for sample in trace.mass_ledger}
    evaluator = _Evaluator(case, request, context, reference, initial)
    for state in [initial, *trace.outputs.values()]:
        evaluator.record(result, state, outflows.get(state.time, 0.0))
    if out_dir is not None:
        for label, state in (("initial", initial), ("final", final)):
            path = os.path.join(out_dir, reports.profile_name(case.case_id, n_cells, degree, label))
            reports.emit_profile(
                state, mesh, path, evaluator.reference_at(state.time), request.error_order
            )
            result.profiles.append(path)
    return result


class _Evaluator:
    """Errors and moments of the states of one run."""

    def __init__(
        self,
        case: CaseSpec,
        request: RunRequest,
        context: SchemeContext,
        reference: AnalyticSolution | None,
        initial: DGState,
    ):
        self._case = case
        self._request = request
        self._context = context
        self._reference = reference
        self._initial_mass = float(np.dot(context.mesh.widths, initial.coeffs[:, 0]))
        self._initial_zeroth = float(
            moments(initial, context.mesh, p_max=0, order=request.error_order).values[0]
        )

    def reference_at(self, t: float) -> Callable[[np.ndarray], np.ndarray] | None:
        reference = self._reference
        if reference is None or t > reference.t_max:
            return None

        def density(x: np.ndarray) -> np.ndarray:
            return reference.mass_density(t, x)

        return density

    def record(self, result: RunResult, state: DGState, outflow: float) -> None:
        density = self.reference_at(state.time)
        mesh, order = self._context.mesh, self._request.error_order
        if density is not None:
            result.errors.append(error_report(state, density, mesh, self._context.rule, order))
        elif self._reference is not None:
            _logger.warning(
                "Reference for case %s not valid at t=%g", self._case.case_id, state.time
            )
        if not self._request.moments:
            return
        expected: list[float | None] = [None] * 6
        if density is not None:
            expected = [float(m) for m in reference_moments(density, mesh, order=order)]
        if self._case.zeroth_moment is not None:
            zeroth = self._case.zeroth_moment(state.time)
            expected[0] = zeroth if math.isfinite(zeroth) else expected[0]
        expected[1] = self._initial_mass - outflow
        result.moments.append(
            moments(
                state, mesh, order=order, initial_zeroth=self._initial_zeroth, reference=expected
            )
        )


def _run_job(request: RunRequest, n_cells: int, degree: int, out_dir: str | None) -> RunResult:
    return run_single(request, n_cells, degree, out_dir)


def execute(
    request: RunRequest, jobs: list[tuple[int, int]], out_dir: str | None
) -> dict[tuple[int, int], RunResult]:
    """Runs every (N, k) job, in parallel worker processes when ``request.jobs`` > 1."""
    if request.jobs > 1 and len(jobs) > 1:
        workers = min(request.jobs, len(jobs))
        _logger.info("Running %d jobs on %d workers", len(jobs), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, request, n, k, out_dir) for n, k in jobs]
            results = [future.result() for future in futures]
    else:
        results = [_run_job(request, n, k, out_dir) for n, k in jobs]
    return {result.key: result for result in results}


@dataclass(frozen=True)
class AcceptanceCheck:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class CaseReport:
    """Everything ``run_case`` produced."""

    request: RunRequest
    reference_kind: str
    runs: list[RunResult]
    tables: list[EOCTable] = field(default_factory=list)
    checks: list[AcceptanceCheck] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    @property
    def failed_runs(self) -> list[RunResult]:
        return [run for run in self.runs if not run.ok]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict[str, Any]:
        case = get_case(self.request.case_id)
        return {
            "config": self.request.to_document(),
            "case": {
                "id": case.case_id,
                "title": case.title,
                "kernel": case.kernel_id,
                "reference": self.reference_kind,
            },
            "runs": [run.to_dict() for run in self.runs],
            "eoc": [table.to_dict() for table in self.tables],
            "acceptance": [check.to_dict() for check in self.checks],
            "passed": self.passed and not self.failed_runs,
        }


def _analytic_tables(
    case: CaseSpec, request: RunRequest, results: dict[tuple[int, int], RunResult]
) -> list[EOCTable]:
    tables = []
    for degree in request.degrees:
        rows = [
            results[(n, degree)]
            for n in request.sizes(degree)
            if results[(n, degree)].ok and results[(n, degree)].errors
        ]
        if rows:
            tables.append(
                EOCTable.from_errors(
                    f"Case {case.case_id}, {case.title}",
                    degree,
                    [run.n_cells for run in rows],
                    [run.errors[-1].e_h for run in rows],
                    [run.errors[-1].e_hd for run in rows],
                )
            )
    return tables


def _self_tables(
    case: CaseSpec, request: RunRequest, results: dict[tuple[int, int], RunResult]
) -> list[EOCTable]:
    tables = []
    for degree in request.degrees:
        sizes, e_h, e_hd = [], [], []
        for n in request.sizes(degree):
            coarse, fine = results.get((n, degree)), results.get((2 * n, degree))
            if coarse is None or fine is None or not (coarse.ok and fine.ok):
                _logger.warning("No solution on N=%d to compare N=%d, k=%d with", 2 * n, n, degree)
                continue
            assert coarse.state is not None and fine.state is not None
            sizes.append(n)
            e_h.append(
                self_error(coarse.state, fine.state, coarse.mesh, fine.mesh, request.error_order)
            )
            e_hd.append(
                self_error(
                    coarse.state, fine.state, coarse.mesh, fine.mesh, coarse.quadrature_order
                )
            )
        if sizes:
            tables.append(
                EOCTable.from_errors(
                    f"Case {case.case_id}, {case.title} (self-convergence)",
                    degree,
                    sizes,
                    e_h,
                    e_hd,
                )
            )
    return tables


def _order_check(
    name: str, tables: list[EOCTable], bounds: tuple[float, float]
) -> list[AcceptanceCheck]:
    low, high = bounds
    checks = []
    for table in tables:
        order = table.finest_eoc if name == "eoc_h" else table.finest_discrete_eoc
        if math.isnan(order):
            checks.append(AcceptanceCheck(f"{name} k={table.degree}", False, "no order available"))
            continue
        checks.append(
            AcceptanceCheck(
                f"{name} k={table.degree}",
                low <= order <= high,
                f"finest order {order:.3f}, required [{low}, {high}]",
            )
        )
    if not tables:
        checks.append(AcceptanceCheck(name, False, "no convergence table"))
    return checks


def evaluate_acceptance(
    request: RunRequest, runs: list[RunResult], tables: list[EOCTable]
) -> list[AcceptanceCheck]:
    """Checks the configured thresholds; a failed run fails every check it would feed."""
    acceptance = request.acceptance
    checks: list[AcceptanceCheck] = []
    if acceptance.eoc_h is not None:
        checks += _order_check("eoc_h", tables, acceptance.eoc_h)
    if acceptance.eoc_hd is not None:
        checks += _order_check("eoc_hd", tables, acceptance.eoc_hd)
    for run in runs:
        label = f"N={run.n_cells} k={run.degree}"
        if not run.ok:
            if not acceptance.empty:
                checks.append(AcceptanceCheck(f"run {label}", False, str(run.failure)))
            continue
        if acceptance.max_mass_drift is not None:
            drift = run.mass_drift
            checks.append(
                AcceptanceCheck(
                    f"mass drift {label}",
                    drift <= acceptance.max_mass_drift,
                    f"{drift:.3e} <= {acceptance.max_mass_drift:.3e}",
                )
            )
        if acceptance.max_error_growth is not None and len(run.errors) >= 2:
            first, last = run.errors[0].e_h, run.errors[-1].e_h
            checks.append(
                AcceptanceCheck(
                    f"error growth {label}",
                    last <= acceptance.max_error_growth * first,
                    f"e_h {first:.3e} -> {last:.3e}",
                )
            )
        if acceptance.max_moment_error is not None and run.moments:
            error = float(run.moments[-1].errors[0])
            checks.append(
                AcceptanceCheck(
                    f"zeroth moment {label}",
                    not math.isnan(error) and error <= acceptance.max_moment_error,
                    f"e(M_0) {error:.3e} <= {acceptance.max_moment_error:.3e}",
                )
            )
    return checks


def run_case(request: RunRequest, out_dir: str) -> CaseReport:
    """Runs the (N, k) battery of ``request`` and writes its artifacts to ``out_dir``.

    With a closed-form reference the errors are measured against it; otherwise every N is
    compared with the solution on 2N cells, running the finest 2N in addition.

    Returns:
        CaseReport: runs, convergence tables and acceptance checks.
    """
    started = time.perf_counter()
    case = get_case(request.case_id)
    reference = resolve_reference(case, request)
    self_convergence = reference is None and not request.paired
    os.makedirs(out_dir, exist_ok=True)

    jobs = list(request.grid)
    if self_convergence:
        for degree in request.degrees:
            finest = (2 * max(request.sizes(degree)), degree)
            if finest not in jobs:
                jobs.append(finest)
    results = execute(request, jobs, out_dir)
    runs = [results[key] for key in jobs]

    tables: list[EOCTable] = []
    if self_convergence:
        tables = _self_tables(case, request, results)
    elif not request.paired:
        tables = _analytic_tables(case, request, results)

    report = CaseReport(
        request=request,
        reference_kind="self" if reference is None else "analytic",
        runs=runs,
        tables=tables,
        checks=evaluate_acceptance(request, runs, tables),
    )
    report.artifacts += [path for run in runs for path in run.profiles]
    report.artifacts += reports.write_eoc_tables(tables, out_dir, case.case_id)
    if request.moments:
        moments_document = {
            "case": case.case_id,
            "runs": [
                {
                    "N": run.n_cells,
                    "k": run.degree,
                    "moments": [_moment_dict(m) for m in run.moments],
                }
                for run in runs
                if run.ok
            ],
        }
        path = os.path.join(out_dir, f"moments_{case.case_id}.json")
        report.artifacts.append(reports.write_json(moments_document, path))
    report.artifacts.append(
        reports.write_json(report.to_dict(), os.path.join(out_dir, REPORT_NAME))
    )
    for table in tables:
        _logger.info("Case %s, k=%d:\n%s", case.case_id, table.degree, table.to_markdown())
    _logger.info(
        "Case %s finished %d runs in %.2f s",
        case.case_id,
        len(runs),
        time.perf_counter() - started,
    )
    return report
