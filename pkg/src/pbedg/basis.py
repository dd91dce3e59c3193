# Copyright pbe-dg contributors. All Rights Reserved.

"""Legendre modal basis, the DG state and the L2 projection of initial data."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

from .exceptions import InvalidArgumentError, ProjectionError
from .mesh import MAX_QUADRATURE_ORDER, Mesh, QuadratureRule, gauss_points, gauss_rule
from .mesh import _locate_unchecked, locate_cells

_logger = logging.getLogger(__name__)

PROJECTION_ORDER = 16

MassDensity = Callable[[np.ndarray], np.ndarray]


def legendre_eval(i: int, xi: float | np.ndarray) -> np.ndarray:
    """phi_i(xi) for the Legendre polynomial of degree i."""
    if not 0 <= i <= MAX_QUADRATURE_ORDER:
        raise InvalidArgumentError(f"Legendre degree must be in [0, {MAX_QUADRATURE_ORDER}]")
    return legendre.legvander(np.asarray(xi, dtype=float), i)[..., i]


def legendre_vandermonde(xi: np.ndarray, degree: int) -> np.ndarray:
    """Matrix V[..., i] = phi_i(xi) for i = 0..degree."""
    return legendre.legvander(np.asarray(xi, dtype=float), degree)


def legendre_derivative_vandermonde(xi: np.ndarray, degree: int) -> np.ndarray:
    """Matrix D[..., i] = phi_i'(xi) for i = 0..degree."""
    xi = np.asarray(xi, dtype=float)
    columns = [legendre.Legendre.basis(i).deriv()(xi) for i in range(degree + 1)]
    return np.stack(columns, axis=-1)


def mass_diagonal(degree: int) -> np.ndarray:
    """Normalization constants c_i = 2 / (2i + 1) of the diagonal mass matrix."""
    return 2.0 / (2.0 * np.arange(degree + 1) + 1.0)


@dataclass(frozen=True, eq=False)
class DGState:
    """Per-cell Legendre coefficients of the mass density n_h and the current time.

    ``coeffs[j, i]`` multiplies phi_i on cell j; ``coeffs[:, 0]`` are the cell averages.
    """

    coeffs: np.ndarray
    time: float = 0.0

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n_cells(self) -> int:
        return self.coeffs.shape[0]

    def with_coeffs(self, coeffs: np.ndarray, time: float | None = None) -> DGState:
        return replace(self, coeffs=coeffs, time=self.time if time is None else time)

    def copy(self) -> DGState:
        return replace(self, coeffs=self.coeffs.copy())


@dataclass(frozen=True, eq=False)
class PointSampler:
    """Precomputed evaluation of any state of a given degree at fixed points of a mesh.

    The points may have any shape; the sampled values have the same shape.
    """

    cells: np.ndarray
    vandermonde: np.ndarray = field(repr=False)

    @classmethod
    def create(
        cls, mesh: Mesh, points: np.ndarray, degree: int, cells: np.ndarray | None = None
    ) -> PointSampler:
        """Precomputes cell indices and reference coordinates of ``points``.

        ``cells`` may be given when the owning cells are known, which avoids relocating points
        that sit within round-off of an interface.
        """
        points = np.asarray(points, dtype=float)
        if cells is None:
            cells = _locate_unchecked(mesh, points)
        else:
            cells = np.broadcast_to(np.asarray(cells), points.shape)
        xi = np.clip((points - mesh.pivots[cells]) * (2.0 / mesh.widths[cells]), -1.0, 1.0)
        return cls(cells=cells, vandermonde=legendre_vandermonde(xi, degree))

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...i->...", coeffs[self.cells], self.vandermonde)


def eval_state(state: DGState, mesh: Mesh, x: float | np.ndarray) -> np.ndarray:
    """Evaluates n_h at x in (0, L].

    Raises:
        OutOfDomainError: if any x lies outside the domain.
    """
    points = np.asarray(x, dtype=float)
    locate_cells(mesh, points)
    return PointSampler.create(mesh, points, state.degree)(state.coeffs)


def values_at_gauss_points(state: DGState, rule: QuadratureRule) -> np.ndarray:
    """n_h at the mapped Gauss points of every cell, shape (N, Q)."""
    return state.coeffs @ legendre_vandermonde(rule.nodes, state.degree).T


def project_initial(
    n0: MassDensity, mesh: Mesh, degree: int, projection_order: int = PROJECTION_ORDER
) -> DGState:
    """Piecewise L2 projection of the initial mass density onto degree-k polynomials.

    n_j^i = (1 / c_i) * int_{-1}^{1} phi_i(xi) n0(x_j(xi)) dxi, evaluated with a Gauss rule of
    order ``projection_order``.

    Raises:
        ProjectionError: if n0 is not finite at a projection point.
    """
    if not 0 <= degree < 2 * projection_order:
        raise InvalidArgumentError(f"degree {degree} too high for a {projection_order}-point rule")
    rule = gauss_rule(projection_order)
    values = np.asarray(n0(gauss_points(mesh, rule)), dtype=float)
    finite = np.isfinite(values)
    if not np.all(finite):
        cell = int(np.argwhere(~finite)[0, 0])
        raise ProjectionError(f"initial data not finite in cell {cell}", cell)
    test = legendre_vandermonde(rule.nodes, degree) * rule.weights[:, None]
    coeffs = (values @ test) / mass_diagonal(degree)
    _logger.debug("Projected initial data on N=%d cells with k=%d", mesh.n_cells, degree)
    return DGState(coeffs=coeffs, time=0.0)


def cell_average(state: DGState, j: int) -> float:
    return float(state.coeffs[j, 0])


def cell_averages(state: DGState) -> np.ndarray:
    return state.coeffs[:, 0]


def total_mass(state: DGState, mesh: Mesh) -> float:
    """First moment M_1 = sum_j h_j * nbar_j."""
    return float(np.dot(mesh.widths, state.coeffs[:, 0]))
