# Copyright pbe-dg contributors. All Rights Reserved.

"""Geometric meshes of the truncated size domain and Gauss–Legendre rules on [-1, 1]."""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError, OutOfDomainError

_logger = logging.getLogger(__name__)

SPAN_EXPONENT = 30.0
"""The last interface sits at x0 * 2**(SPAN_EXPONENT * (N - 1) / N)."""

MAX_QUADRATURE_ORDER = 20

_NEWTON_TOLERANCE = 1e-15
_NEWTON_MAX_ITERATIONS = 100


@dataclass(frozen=True, eq=False)
class Mesh:
    """Partition of (0, L] into N half-open cells (x_p, x_{p+1}].

    Cells are numbered 0..N-1 and interfaces 0..N, with ``interfaces[0] == 0``.

    Args:
        interfaces: strictly increasing interface coordinates, first entry 0.
        ratio: geometric ratio r of the interfaces when built by ``build_geometric_mesh``.
    """

    interfaces: np.ndarray
    ratio: float | None = None
    widths: np.ndarray = field(init=False, repr=False)
    pivots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        interfaces = np.array(self.interfaces, dtype=float)
        if interfaces.ndim != 1 or interfaces.size < 2:
            raise InvalidArgumentError("a mesh needs at least two interfaces")
        if interfaces[0] != 0.0:
            raise InvalidArgumentError(f"first interface must be 0, got {interfaces[0]}")
        if not np.all(np.isfinite(interfaces)) or np.any(np.diff(interfaces) <= 0.0):
            raise InvalidArgumentError("interfaces must be finite and strictly increasing")
        interfaces.setflags(write=False)
        widths = np.diff(interfaces)
        widths.setflags(write=False)
        pivots = 0.5 * (interfaces[:-1] + interfaces[1:])
        pivots.setflags(write=False)
        object.__setattr__(self, "interfaces", interfaces)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "pivots", pivots)

    @property
    def n_cells(self) -> int:
        return self.widths.size

    @property
    def length(self) -> float:
        """Right end L of the truncated domain."""
        return float(self.interfaces[-1])

    @property
    def x0(self) -> float:
        return float(self.interfaces[1])

    def to_dict(self) -> dict:
        """Mesh description for run reports: N, x0, r and every interface."""
        return {
            "N": self.n_cells,
            "x0": self.x0,
            "r": self.ratio,
            "interfaces": self.interfaces.tolist(),
        }


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss–Legendre nodes (strictly increasing) and weights on [-1, 1]."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def build_geometric_mesh(
    n_cells: int, x0: float, span_exponent: float = SPAN_EXPONENT
) -> Mesh:
    """Builds the geometric mesh x_{1/2} = 0, x_{3/2} = x0, x_{p+1/2} = r * x_{p-1/2}.

    Args:
        n_cells: number of cells N >= 2.
        x0: right end of the first cell.
        span_exponent: r = 2**(span_exponent / N).

    Returns:
        Mesh: the geometric mesh with ``ratio`` set to r.
    """
    if n_cells < 2:
        raise InvalidArgumentError(f"a geometric mesh needs N >= 2 cells, got {n_cells}")
    if not x0 > 0.0:
        raise InvalidArgumentError(f"x0 must be positive, got {x0}")
    ratio = 2.0 ** (span_exponent / n_cells)
    interfaces = np.empty(n_cells + 1)
    interfaces[0] = 0.0
    interfaces[1:] = x0 * ratio ** np.arange(n_cells)
    _logger.debug("Geometric mesh N=%d x0=%g r=%.12g L=%g", n_cells, x0, ratio, interfaces[-1])
    return Mesh(interfaces, ratio=ratio)


def mesh_from_interfaces(interfaces: np.ndarray | list[float]) -> Mesh:
    return Mesh(np.asarray(interfaces, dtype=float))


def _legendre_with_derivative(order: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    previous = np.ones_like(x)
    current = x.copy()
    for m in range(1, order):
        previous, current = current, ((2 * m + 1) * x * current - m * previous) / (m + 1)
    derivative = order * (x * current - previous) / (x * x - 1.0)
    return current, derivative


@functools.lru_cache(maxsize=None)
def gauss_rule(order: int) -> QuadratureRule:
    """Gauss–Legendre rule of the given order by Newton iteration on P_order.

    The rule integrates polynomials of degree <= 2 * order - 1 exactly. Nodes and weights are
    symmetrized so that the rule is exactly symmetric about 0.
    """
    if not 1 <= order <= MAX_QUADRATURE_ORDER:
        raise InvalidArgumentError(
            f"quadrature order must be in [1, {MAX_QUADRATURE_ORDER}], got {order}"
        )
    k = np.arange(1, order + 1)
    x = np.cos(np.pi * (k - 0.25) / (order + 0.5))
    for _ in range(_NEWTON_MAX_ITERATIONS):
        value, derivative = _legendre_with_derivative(order, x)
        step = value / derivative
        x = x - step
        if np.max(np.abs(step)) < _NEWTON_TOLERANCE:
            break
    _, derivative = _legendre_with_derivative(order, x)
    weights = 2.0 / ((1.0 - x * x) * derivative * derivative)

    nodes = x[::-1]
    weights = weights[::-1]
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def _locate_unchecked(mesh: Mesh, x: np.ndarray) -> np.ndarray:
    cells = np.searchsorted(mesh.interfaces, x, side="left") - 1
    return np.clip(cells, 0, mesh.n_cells - 1)


def locate_cells(mesh: Mesh, x: np.ndarray | list[float]) -> np.ndarray:
    """Vectorized ``locate_cell``."""
    points = np.asarray(x, dtype=float)
    outside = ~((points > 0.0) & (points <= mesh.length))
    if np.any(outside):
        bad = float(points[outside].flat[0])
        raise OutOfDomainError(f"x = {bad!r} is outside (0, {mesh.length!r}]", bad)
    return _locate_unchecked(mesh, points)


def locate_cell(mesh: Mesh, x: float) -> int:
    """Index J of the cell with x_J < x <= x_{J+1}.

    Raises:
        OutOfDomainError: if x <= 0 or x > L.
    """
    return int(locate_cells(mesh, np.array([x]))[0])


def gauss_points_of_cell(mesh: Mesh, rule: QuadratureRule, j: int) -> np.ndarray:
    if not 0 <= j < mesh.n_cells:
        raise InvalidArgumentError(f"cell index {j} outside [0, {mesh.n_cells})")
    return mesh.pivots[j] + 0.5 * mesh.widths[j] * rule.nodes


def gauss_points(mesh: Mesh, rule: QuadratureRule) -> np.ndarray:
    """All mapped Gauss points as an (N, Q) array."""
    return mesh.pivots[:, None] + 0.5 * mesh.widths[:, None] * rule.nodes[None, :]
