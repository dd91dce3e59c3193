# Copyright pbe-dg contributors. All Rights Reserved.

"""Semi-discrete DG right-hand side, the forward Euler update and the positivity time step bound."""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import DGState, legendre_derivative_vandermonde, mass_diagonal
from .exceptions import DivergedStateError, InvalidArgumentError, InvalidStateError
from .flux import BreakageTables, FluxAssembler, FluxEvaluation
from .kernels import KernelSet
from .mesh import Mesh, QuadratureRule, gauss_rule

_logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SchemeContext:
    """Everything a step needs besides the state: mesh, rule, kernels and flux tables."""

    mesh: Mesh
    rule: QuadratureRule
    kernel_set: KernelSet
    degree: int
    fluxes: FluxAssembler = field(repr=False)

    @classmethod
    def create(
        cls,
        mesh: Mesh,
        kernel_set: KernelSet,
        degree: int,
        quadrature_order: int | None = None,
    ) -> SchemeContext:
        """Builds the context with Q = k + 1 unless ``quadrature_order`` is given."""
        if degree < 0:
            raise InvalidArgumentError(f"polynomial degree must be >= 0, got {degree}")
        order = degree + 1 if quadrature_order is None else quadrature_order
        rule = gauss_rule(order)
        _logger.info(
            "Preparing %s fluxes on N=%d cells with k=%d, Q=%d",
            kernel_set.name,
            mesh.n_cells,
            degree,
            order,
        )
        return cls(
            mesh=mesh,
            rule=rule,
            kernel_set=kernel_set,
            degree=degree,
            fluxes=FluxAssembler(mesh, rule, kernel_set, degree),
        )

    @property
    def tables(self) -> BreakageTables | None:
        return self.fluxes.breakage

    @functools.cached_property
    def _volume_operator(self) -> np.ndarray:
        """omega_g * phi_i'(s_g), shape (Q, k + 1)."""
        derivatives = legendre_derivative_vandermonde(self.rule.nodes, self.degree)
        return self.rule.weights[:, None] * derivatives

    @functools.cached_property
    def _left_trace(self) -> np.ndarray:
        """phi_i(-1) = (-1)^i."""
        return (-1.0) ** np.arange(self.degree + 1)

    @functools.cached_property
    def _inverse_mass(self) -> np.ndarray:
        """1 / ((h_j / 2) c_i), shape (N, k + 1)."""
        return 1.0 / (0.5 * self.mesh.widths[:, None] * mass_diagonal(self.degree)[None, :])

    @functools.cached_property
    def breakage_cfl_bound(self) -> float:
        """State-independent bound 1 / max G_{j-1,j}^a for pure breakage problems.

        Without aggregation the death coefficients and the birth term drop out of the bound,
        so it only depends on the breakage tables.
        """
        if self.kernel_set.has_aggregation:
            raise InvalidArgumentError("the cached bound only applies to pure breakage problems")
        if self.tables is None:
            return math.inf
        cells = np.arange(self.mesh.n_cells)
        largest = float(np.max(self.tables.interface[cells, cells]))
        return math.inf if largest <= 0.0 else 1.0 / largest


@dataclass(frozen=True, eq=False)
class RhsEvaluation:
    """Time derivatives of the coefficients and the fluxes they were built from."""

    dcoeffs: np.ndarray
    interface_fluxes: np.ndarray
    interior_fluxes: np.ndarray
    fluxes: FluxEvaluation = field(repr=False)


def assemble_rhs(state: DGState, context: SchemeContext) -> RhsEvaluation:
    """Right-hand side of the semi-discrete scheme.

    (h_j / 2) c_i dn_j^i/dt = sum_g omega_g phi_i'(s_g) F(x_j^g) - [F_{j+1} - (-1)^i F_j]

    Raises:
        DivergedStateError: if a flux is not finite.
    """
    if state.coeffs.shape != (context.mesh.n_cells, context.degree + 1):
        raise InvalidArgumentError(
            f"state of shape {state.coeffs.shape} does not match N={context.mesh.n_cells}, "
            f"k={context.degree}"
        )
    fluxes = context.fluxes.evaluate(state)
    interface = fluxes.interface
    interior = fluxes.interior
    assert interior is not None
    _check_finite(interface, interior)

    volume = interior @ context._volume_operator
    boundary = interface[1:, None] - interface[:-1, None] * context._left_trace[None, :]
    dcoeffs = (volume - boundary) * context._inverse_mass
    return RhsEvaluation(
        dcoeffs=dcoeffs,
        interface_fluxes=interface,
        interior_fluxes=interior,
        fluxes=fluxes,
    )


def _check_finite(interface: np.ndarray, interior: np.ndarray) -> None:
    bad_interfaces = np.flatnonzero(~np.isfinite(interface))
    if bad_interfaces.size:
        p = int(bad_interfaces[0])
        raise DivergedStateError(f"non-finite flux at interface {p}", cell=p)
    bad_points = np.argwhere(~np.isfinite(interior))
    if bad_points.size:
        j, g = (int(i) for i in bad_points[0])
        raise DivergedStateError(f"non-finite flux at Gauss point {g} of cell {j}", j, g)


def euler_update(state: DGState, rhs: RhsEvaluation, dt: float) -> DGState:
    """One forward Euler step n^{m+1} = n^m + dt * dn/dt."""
    if dt < 0.0:
        raise InvalidArgumentError(f"time step must be nonnegative, got {dt}")
    if dt == 0.0:
        return state.copy()
    return state.with_coeffs(state.coeffs + dt * rhs.dcoeffs, time=state.time + dt)


def cfl_max_dt(state: DGState, context: SchemeContext) -> float:
    """Largest forward Euler step that keeps every cell average positive.

    1 / max_{j,a} ((Gamma_jj^a)_+ + G_{j-1,j}^a + (-B_{a,j})_+ / (h_j nbar_j)), or ``math.inf``
    when the maximum is 0. Cells whose average is exactly 0 (underflowed tails) contribute only
    the first two terms.

    Raises:
        InvalidStateError: if a cell average is negative.
    """
    averages = state.coeffs[:, 0]
    negative = np.flatnonzero(averages < 0.0)
    if negative.size:
        raise InvalidStateError(
            f"negative cell average {averages[negative[0]]!r} in cell {int(negative[0])}"
        )
    split = context.fluxes.decomposition(state)
    death = np.clip(split.aggregation_death, 0.0, None) + split.breakage_death
    loss = np.clip(-split.aggregation_birth, 0.0, None)
    scaled_loss = np.zeros_like(loss)
    positive = averages > 0.0
    scaled_loss[positive] = loss[positive] / (context.mesh.widths[positive] * averages[positive])
    largest = float(np.max(death + scaled_loss[:, None]))
    if not largest > 0.0:
        return math.inf
    return 1.0 / largest
