# Copyright pbe-dg contributors. All Rights Reserved.

"""Quadrature evaluation of the nonlocal aggregation and breakage fluxes.

In conservative form the mass density obeys d/dt n + d/dx (F_a + F_b) = 0 with

    F_a(x) = int_0^x int_{x-u}^L A(u, v) n(u) n(v) dv du,
    F_b(x) = -int_x^L int_0^x B(u, v) n(v) du dv,

A(u, v) = K(u, v) / v and B(u, v) = u b(u, v) S(v) / v. Outer integrals are taken with the
Gauss points of the mesh. Inner aggregation integrals Gamma(x, u) = int_{x-u}^L A(u, v) n(v) dv
split into a partial panel on [x - u, x_{J+1}] and a suffix sum of full-cell integrals. Inner
breakage integrals only depend on the mesh and are tabulated once as prefix sums over cells.

The limiter controls the sign of n_h at the Gauss points only, so the aggregation inner
integrals sample the nonnegative part max(n_h, 0) at the panel abscissae in between.

Cells are numbered 0..N-1 and interfaces 0..N; interface p is the right end of cell p - 1.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import DGState, PointSampler, values_at_gauss_points
from .exceptions import InvalidArgumentError
from .kernels import KernelSet
from .mesh import Mesh, QuadratureRule, _locate_unchecked, gauss_points

_logger = logging.getLogger(__name__)

_DEGENERATE_PANEL = 1e-300


def outer_weights(gauss_values: np.ndarray, mesh: Mesh, rule: QuadratureRule) -> np.ndarray:
    """W[l, a] = (h_l / 2) * omega_a * n_h(x_l^a)."""
    return 0.5 * mesh.widths[:, None] * rule.weights[None, :] * gauss_values


def _exclusive_prefix(values: np.ndarray) -> np.ndarray:
    prefix = np.zeros((values.shape[0] + 1,) + values.shape[1:])
    np.cumsum(values, axis=0, out=prefix[1:])
    return prefix


def _suffix_sums(cell_integrals: np.ndarray) -> np.ndarray:
    """Column i of the result sums columns i..N-1 of the input; column N is zero."""
    rows, n_cells = cell_integrals.shape
    suffix = np.zeros((rows, n_cells + 1))
    suffix[:, :n_cells] = np.cumsum(cell_integrals[:, ::-1], axis=1)[:, ::-1]
    return suffix


@dataclass(frozen=True, eq=False)
class _InnerPanels:
    """Sub-intervals [x_j, x_j^g] and [x_j^g, x_{j+1}] of every cell around its Gauss points."""

    inner_points: np.ndarray
    inner_half_widths: np.ndarray
    outer_points: np.ndarray
    outer_half_widths: np.ndarray

    @classmethod
    def create(cls, mesh: Mesh, rule: QuadratureRule) -> _InnerPanels:
        points = gauss_points(mesh, rule)
        left = mesh.interfaces[:-1, None]
        right = mesh.interfaces[1:, None]
        inner_half = 0.5 * (points - left)
        outer_half = 0.5 * (right - points)
        shifted = 1.0 + rule.nodes
        return cls(
            inner_points=left[..., None] + inner_half[..., None] * shifted,
            inner_half_widths=inner_half,
            outer_points=points[..., None] + outer_half[..., None] * shifted,
            outer_half_widths=outer_half,
        )


@dataclass(frozen=True, eq=False)
class _PartialPanels:
    """Gamma(x, u) for a fixed list of (x, u) pairs.

    Gamma = half * sum_b omega_b A(u, y_b) n_h(y_b) over [a, x_{J+1}] with a = x - u in cell J,
    plus the suffix sum of the full cells J + 1..N-1 taken from row ``rows`` of a suffix table.
    """

    rows: np.ndarray
    suffix_columns: np.ndarray
    weights: np.ndarray
    sampler: PointSampler

    @classmethod
    def create(
        cls,
        mesh: Mesh,
        rule: QuadratureRule,
        kernel_set: KernelSet,
        degree: int,
        x: np.ndarray,
        u: np.ndarray,
        rows: np.ndarray,
    ) -> _PartialPanels:
        lower = x - u
        cells = _locate_unchecked(mesh, lower)
        upper = mesh.interfaces[cells + 1]
        half = 0.5 * (upper - lower)
        y = 0.5 * (lower + upper)[:, None] + half[:, None] * rule.nodes[None, :]
        weights = half[:, None] * rule.weights[None, :] * kernel_set.aggregation_integrand(
            u[:, None], y
        )
        weights[half <= _DEGENERATE_PANEL] = 0.0
        return cls(
            rows=rows,
            suffix_columns=cells + 1,
            weights=weights,
            sampler=PointSampler.create(mesh, y, degree, cells=cells[:, None]),
        )

    def evaluate(self, coeffs: np.ndarray, suffix: np.ndarray) -> np.ndarray:
        partial = np.einsum("mq,mq->m", self.weights, np.maximum(self.sampler(coeffs), 0.0))
        return partial + suffix[self.rows, self.suffix_columns]


@dataclass(frozen=True, eq=False)
class AggregationWorkspace:
    """Per-state scratch of one aggregation sweep.

    Attributes:
        gauss_values: n_h at the mapped Gauss points, (N, Q).
        outer_weights: (h_l / 2) omega_a n_h(x_l^a), (N, Q).
        suffix: suffix sums over cells of c_i(u) = int_{I_i} A(u, v) n_h(v) dv for every Gauss
            abscissa u (row l * Q + a), shape (N Q, N + 1).
    """

    gauss_values: np.ndarray
    outer_weights: np.ndarray
    suffix: np.ndarray


@dataclass(frozen=True, eq=False)
class AggregationSweep:
    fluxes: np.ndarray
    gamma: np.ndarray = field(repr=False)


class AggregationQuadrature:
    """Time-independent part of the aggregation flux quadrature on one mesh.

    Kernel values at all quadrature abscissae are tabulated on construction; a sweep for a
    state only evaluates n_h. The interior (Gauss point) panels are built on first use.
    """

    def __init__(self, mesh: Mesh, rule: QuadratureRule, kernel_set: KernelSet, degree: int):
        if not kernel_set.has_aggregation:
            raise InvalidArgumentError(f"kernel set {kernel_set.name} has no aggregation kernel")
        self.mesh = mesh
        self.rule = rule
        self.kernel_set = kernel_set
        self.degree = degree
        n_cells, order = mesh.n_cells, rule.order
        self._points = gauss_points(mesh, rule)
        self._suffix_kernel = self._cell_kernel_table(self._points.ravel())

        targets, sources = np.tril_indices(n_cells + 1, k=-1)
        interface = np.repeat(targets, order)
        cell = np.repeat(sources, order)
        node = np.tile(np.arange(order), targets.size)
        self._interface_index = (interface, cell, node)
        self._interface_panels = _PartialPanels.create(
            mesh,
            rule,
            kernel_set,
            degree,
            x=mesh.interfaces[interface],
            u=self._points[cell, node],
            rows=cell * order + node,
        )

    def _cell_kernel_table(self, abscissae: np.ndarray) -> np.ndarray:
        """T[u, i, b] = (h_i / 2) omega_b A(u, x_i^b)."""
        values = self.kernel_set.aggregation_integrand(
            abscissae[:, None, None], self._points[None, :, :]
        )
        return 0.5 * self.mesh.widths[None, :, None] * self.rule.weights[None, None, :] * values

    def workspace(self, state: DGState) -> AggregationWorkspace:
        gauss_values = values_at_gauss_points(state, self.rule)
        cell_integrals = np.einsum("uib,ib->ui", self._suffix_kernel, gauss_values)
        return AggregationWorkspace(
            gauss_values=gauss_values,
            outer_weights=outer_weights(gauss_values, self.mesh, self.rule),
            suffix=_suffix_sums(cell_integrals),
        )

    def interface(
        self, state: DGState, workspace: AggregationWorkspace | None = None
    ) -> AggregationSweep:
        """F_a at all interfaces together with the dense table gamma[p, l, a] = Gamma(x_p, x_l^a).

        gamma is zero for l >= p; F_a[0] = 0.
        """
        if workspace is None:
            workspace = self.workspace(state)
        n_cells, order = self.mesh.n_cells, self.rule.order
        interface, cell, node = self._interface_index
        gamma = np.zeros((n_cells + 1, n_cells, order))
        gamma[interface, cell, node] = self._interface_panels.evaluate(
            state.coeffs, workspace.suffix
        )
        fluxes = np.einsum("plq,lq->p", gamma, workspace.outer_weights)
        return AggregationSweep(fluxes=fluxes, gamma=gamma)

    @functools.cached_property
    def _interior(self) -> tuple[_InnerPanels, _PartialPanels, _PartialPanels, np.ndarray, tuple]:
        mesh, rule = self.mesh, self.rule
        n_cells, order = mesh.n_cells, rule.order
        panels = _InnerPanels.create(mesh, rule)

        targets, sources = np.tril_indices(n_cells, k=-1)
        per_pair = order * order
        target = np.repeat(targets, per_pair)
        source = np.repeat(sources, per_pair)
        point = np.tile(np.repeat(np.arange(order), order), targets.size)
        node = np.tile(np.arange(order), targets.size * order)
        full = _PartialPanels.create(
            mesh,
            rule,
            self.kernel_set,
            self.degree,
            x=self._points[target, point],
            u=self._points[source, node],
            rows=source * order + node,
        )

        inner_abscissae = panels.inner_points.ravel()
        own_cell = np.repeat(np.arange(n_cells), per_pair)
        own_point = np.tile(np.repeat(np.arange(order), order), n_cells)
        partial = _PartialPanels.create(
            mesh,
            rule,
            self.kernel_set,
            self.degree,
            x=self._points[own_cell, own_point],
            u=inner_abscissae,
            rows=np.arange(inner_abscissae.size),
        )
        inner_kernel = self._cell_kernel_table(inner_abscissae)
        _logger.debug(
            "Built interior aggregation panels: %d full-cell and %d partial abscissae",
            target.size,
            inner_abscissae.size,
        )
        return panels, full, partial, inner_kernel, (target * order + point, source, node)

    def interior(
        self, state: DGState, workspace: AggregationWorkspace | None = None
    ) -> np.ndarray:
        """F_a at every mapped Gauss point, shape (N, Q)."""
        if workspace is None:
            workspace = self.workspace(state)
        panels, full, partial, inner_kernel, (target, source, node) = self._interior
        n_cells, order = self.mesh.n_cells, self.rule.order
        coeffs = state.coeffs

        gamma_full = full.evaluate(coeffs, workspace.suffix)
        fluxes = np.bincount(
            target,
            weights=workspace.outer_weights[source, node] * gamma_full,
            minlength=n_cells * order,
        ).reshape(n_cells, order)

        inner_sampler = PointSampler.create(
            self.mesh, panels.inner_points, self.degree, cells=np.arange(n_cells)[:, None, None]
        )
        inner_values = np.maximum(inner_sampler(coeffs), 0.0)
        inner_suffix = _suffix_sums(
            np.einsum("uib,ib->ui", inner_kernel, workspace.gauss_values)
        )
        gamma_partial = partial.evaluate(coeffs, inner_suffix).reshape(n_cells, order, order)
        fluxes += np.einsum(
            "jg,a,jga,jga->jg",
            panels.inner_half_widths,
            self.rule.weights,
            inner_values,
            gamma_partial,
        )
        return fluxes


@dataclass(frozen=True, eq=False)
class BreakageTables:
    """Time-independent inner breakage integrals.

    With g_i(v) = int_{I_i} B(u, v) du evaluated by the Q-point rule:

    Attributes:
        interface: G[p, l, a] = sum_{i < p} g_i(x_l^a), shape (N + 1, N, Q).
        outer_points: abscissae of [x_j^g, x_{j+1}], shape (N, Q, Q).
        outer_half_widths: half widths of those panels, shape (N, Q).
        interior_self: inner integral int_0^{x_j^g} B(u, v) du at v = outer_points, (N, Q, Q).
        interior_far: the same inner integral at v = x_l^a for cells l > j, zero for l <= j,
            shape (N, Q, N, Q).
    """

    mesh: Mesh
    rule: QuadratureRule
    interface: np.ndarray = field(repr=False)
    outer_points: np.ndarray = field(repr=False)
    outer_half_widths: np.ndarray = field(repr=False)
    interior_self: np.ndarray = field(repr=False)
    interior_far: np.ndarray = field(repr=False)

    @functools.cached_property
    def _right_of_interface(self) -> np.ndarray:
        n_cells = self.mesh.n_cells
        mask = np.arange(n_cells)[None, :] >= np.arange(n_cells + 1)[:, None]
        return self.interface * mask[:, :, None]

    def interface_fluxes(self, weights: np.ndarray) -> np.ndarray:
        """F_b[p] = -sum_{l >= p} sum_a W[l, a] G[p, l, a]; F_b[N] = 0."""
        return -np.einsum("plq,lq->p", self._right_of_interface, weights)

    def interior_fluxes(self, coeffs: np.ndarray, weights: np.ndarray) -> np.ndarray:
        degree = coeffs.shape[1] - 1
        n_cells = self.mesh.n_cells
        sampler = PointSampler.create(
            self.mesh, self.outer_points, degree, cells=np.arange(n_cells)[:, None, None]
        )
        own = np.einsum(
            "jg,a,jga,jga->jg",
            self.outer_half_widths,
            self.rule.weights,
            sampler(coeffs),
            self.interior_self,
        )
        far = np.einsum("jgla,la->jg", self.interior_far, weights)
        return -(own + far)


def build_breakage_tables(
    mesh: Mesh, rule: QuadratureRule, kernel_set: KernelSet
) -> BreakageTables:
    """Tabulates the inner breakage integrals once per (mesh, rule, kernel set)."""
    if not kernel_set.has_breakage:
        raise InvalidArgumentError(f"kernel set {kernel_set.name} has no breakage function")
    n_cells = mesh.n_cells
    points = gauss_points(mesh, rule)
    half_widths = 0.5 * mesh.widths
    weights = rule.weights

    def cell_integrals(v: np.ndarray) -> np.ndarray:
        trailing = (1,) * v.ndim
        values = kernel_set.breakage_integrand(
            points.reshape((n_cells, rule.order) + trailing), v[None, None, ...]
        )
        return np.einsum("i,b,ib...->i...", half_widths, weights, values)

    interface = _exclusive_prefix(cell_integrals(points))

    panels = _InnerPanels.create(mesh, rule)
    cells = np.arange(n_cells)
    below_outer = _exclusive_prefix(cell_integrals(panels.outer_points))[cells, cells]
    inner = panels.inner_points
    own_partial = np.einsum(
        "jg,b,jgba->jga",
        panels.inner_half_widths,
        weights,
        kernel_set.breakage_integrand(inner[..., :, None], panels.outer_points[..., None, :]),
    )
    far_partial = np.einsum(
        "jg,b,jgbla->jgla",
        panels.inner_half_widths,
        weights,
        kernel_set.breakage_integrand(inner[..., None, None], points[None, None, None, :, :]),
    )
    right_of_cell = (cells[None, :] > cells[:, None])[:, None, :, None]
    interior_far = (interface[:n_cells, None, :, :] + far_partial) * right_of_cell

    _logger.debug("Built breakage tables for N=%d, Q=%d", n_cells, rule.order)
    return BreakageTables(
        mesh=mesh,
        rule=rule,
        interface=interface,
        outer_points=panels.outer_points,
        outer_half_widths=panels.outer_half_widths,
        interior_self=below_outer + own_partial,
        interior_far=interior_far,
    )


@dataclass(frozen=True, eq=False)
class FluxEvaluation:
    """All fluxes of one state.

    Attributes:
        aggregation: F_a at interfaces 0..N.
        breakage: F_b at interfaces 0..N.
        interior: F_a + F_b at the mapped Gauss points, (N, Q), or None when not requested.
        gamma: aggregation inner integrals at interfaces, (N + 1, N, Q), or None.
        gauss_values: n_h at the mapped Gauss points, (N, Q).
        outer_weights: (h_l / 2) omega_a n_h(x_l^a), (N, Q).
    """

    aggregation: np.ndarray
    breakage: np.ndarray
    interior: np.ndarray | None
    gamma: np.ndarray | None = field(repr=False)
    gauss_values: np.ndarray = field(repr=False)
    outer_weights: np.ndarray = field(repr=False)

    @property
    def interface(self) -> np.ndarray:
        return self.aggregation + self.breakage


@dataclass(frozen=True, eq=False)
class CellFluxBalance:
    """Birth and death split of F_{j+1} - F_j for one cell j.

    F_{j+1} - F_j = -aggregation_birth
                    + sum_a W[j, a] (aggregation_death[a] + breakage_death[a])
                    - breakage_birth
    """

    cell: int
    aggregation_birth: float
    aggregation_death: np.ndarray
    breakage_death: np.ndarray
    breakage_birth: float
    outer_weights: np.ndarray

    @property
    def flux_difference(self) -> float:
        death = np.dot(self.outer_weights, self.aggregation_death + self.breakage_death)
        return float(death - self.aggregation_birth - self.breakage_birth)


@dataclass(frozen=True, eq=False)
class FluxDecomposition:
    """Per-cell birth and death terms for all cells; arrays are indexed by cell first."""

    aggregation_birth: np.ndarray
    aggregation_death: np.ndarray
    breakage_death: np.ndarray
    breakage_birth: np.ndarray
    outer_weights: np.ndarray

    def cell(self, j: int) -> CellFluxBalance:
        return CellFluxBalance(
            cell=j,
            aggregation_birth=float(self.aggregation_birth[j]),
            aggregation_death=self.aggregation_death[j],
            breakage_death=self.breakage_death[j],
            breakage_birth=float(self.breakage_birth[j]),
            outer_weights=self.outer_weights[j],
        )

    @property
    def flux_differences(self) -> np.ndarray:
        death = np.einsum(
            "jq,jq->j", self.outer_weights, self.aggregation_death + self.breakage_death
        )
        return death - self.aggregation_birth - self.breakage_birth


class FluxAssembler:
    """Evaluates fluxes of states on a fixed mesh, rule, kernel set and polynomial degree."""

    def __init__(
        self,
        mesh: Mesh,
        rule: QuadratureRule,
        kernel_set: KernelSet,
        degree: int,
        breakage_tables: BreakageTables | None = None,
    ):
        self.mesh = mesh
        self.rule = rule
        self.kernel_set = kernel_set
        self.degree = degree
        self.aggregation = (
            AggregationQuadrature(mesh, rule, kernel_set, degree)
            if kernel_set.has_aggregation
            else None
        )
        if kernel_set.has_breakage and breakage_tables is None:
            breakage_tables = build_breakage_tables(mesh, rule, kernel_set)
        self.breakage = breakage_tables if kernel_set.has_breakage else None

    def evaluate(self, state: DGState, interior: bool = True) -> FluxEvaluation:
        n_cells = self.mesh.n_cells
        gauss_values = values_at_gauss_points(state, self.rule)
        weights = outer_weights(gauss_values, self.mesh, self.rule)
        aggregation = np.zeros(n_cells + 1)
        breakage = np.zeros(n_cells + 1)
        interior_fluxes = np.zeros((n_cells, self.rule.order)) if interior else None
        gamma = None

        if self.aggregation is not None:
            workspace = self.aggregation.workspace(state)
            sweep = self.aggregation.interface(state, workspace)
            aggregation = sweep.fluxes
            gamma = sweep.gamma
            if interior_fluxes is not None:
                interior_fluxes += self.aggregation.interior(state, workspace)
        if self.breakage is not None:
            breakage = self.breakage.interface_fluxes(weights)
            if interior_fluxes is not None:
                interior_fluxes += self.breakage.interior_fluxes(state.coeffs, weights)

        return FluxEvaluation(
            aggregation=aggregation,
            breakage=breakage,
            interior=interior_fluxes,
            gamma=gamma,
            gauss_values=gauss_values,
            outer_weights=weights,
        )

    def decomposition(
        self, state: DGState, fluxes: FluxEvaluation | None = None
    ) -> FluxDecomposition:
        if fluxes is None:
            fluxes = self.evaluate(state, interior=False)
        n_cells, order = self.mesh.n_cells, self.rule.order
        weights = fluxes.outer_weights
        cells = np.arange(n_cells)

        aggregation_birth = np.zeros(n_cells)
        aggregation_death = np.zeros((n_cells, order))
        if fluxes.gamma is not None:
            gamma = fluxes.gamma
            aggregation_death = gamma[cells + 1, cells]
            left_of_cell = np.tril(np.ones((n_cells, n_cells)), k=-1)
            aggregation_birth = np.einsum(
                "jlq,lq,jl->j", gamma[:-1] - gamma[1:], weights, left_of_cell
            )

        breakage_death = np.zeros((n_cells, order))
        breakage_birth = np.zeros(n_cells)
        if self.breakage is not None:
            table = self.breakage.interface
            breakage_death = table[cells, cells]
            right_of_cell = np.triu(np.ones((n_cells, n_cells)), k=1)
            breakage_birth = np.einsum(
                "jlq,lq,jl->j", table[1:] - table[:-1], weights, right_of_cell
            )

        return FluxDecomposition(
            aggregation_birth=aggregation_birth,
            aggregation_death=aggregation_death,
            breakage_death=breakage_death,
            breakage_birth=breakage_birth,
            outer_weights=weights,
        )


def interface_flux_agg(
    state: DGState, mesh: Mesh, rule: QuadratureRule, kernel_set: KernelSet, j: int
) -> float:
    """F_a at interface j (0..N)."""
    _check_interface(mesh, j)
    if not kernel_set.has_aggregation:
        return 0.0
    quadrature = AggregationQuadrature(mesh, rule, kernel_set, state.degree)
    return float(quadrature.interface(state).fluxes[j])


def interface_flux_brk(
    state: DGState, tables: BreakageTables, rule: QuadratureRule, j: int
) -> float:
    """F_b at interface j (0..N) from precomputed tables."""
    _check_interface(tables.mesh, j)
    if rule.order != tables.rule.order:
        raise InvalidArgumentError(
            f"tables were built for Q={tables.rule.order}, got a rule with Q={rule.order}"
        )
    gauss_values = values_at_gauss_points(state, tables.rule)
    weights = outer_weights(gauss_values, tables.mesh, tables.rule)
    return float(tables.interface_fluxes(weights)[j])


def interior_flux(
    state: DGState,
    mesh: Mesh,
    rule: QuadratureRule,
    kernel_set: KernelSet,
    tables: BreakageTables | None,
    j: int,
    gauss_point: int,
) -> float:
    """F_a + F_b at the Gauss point ``gauss_point`` of cell j."""
    if not (0 <= j < mesh.n_cells and 0 <= gauss_point < rule.order):
        raise InvalidArgumentError(f"no Gauss point ({j}, {gauss_point}) on this mesh")
    value = 0.0
    if kernel_set.has_aggregation:
        quadrature = AggregationQuadrature(mesh, rule, kernel_set, state.degree)
        value += float(quadrature.interior(state)[j, gauss_point])
    if kernel_set.has_breakage:
        if tables is None:
            tables = build_breakage_tables(mesh, rule, kernel_set)
        gauss_values = values_at_gauss_points(state, rule)
        weights = outer_weights(gauss_values, mesh, rule)
        value += float(tables.interior_fluxes(state.coeffs, weights)[j, gauss_point])
    return value


def flux_difference_decomposition(
    state: DGState,
    mesh: Mesh,
    rule: QuadratureRule,
    kernel_set: KernelSet,
    tables: BreakageTables | None,
    j: int,
) -> CellFluxBalance:
    """Birth and death split of F_{j+1} - F_j for cell j."""
    if not 0 <= j < mesh.n_cells:
        raise InvalidArgumentError(f"cell index {j} outside [0, {mesh.n_cells})")
    assembler = FluxAssembler(mesh, rule, kernel_set, state.degree, breakage_tables=tables)
    return assembler.decomposition(state).cell(j)


def _check_interface(mesh: Mesh, j: int) -> None:
    if not 0 <= j <= mesh.n_cells:
        raise InvalidArgumentError(f"interface index {j} outside [0, {mesh.n_cells}]")
