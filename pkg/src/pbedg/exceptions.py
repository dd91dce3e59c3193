# Copyright pbe-dg contributors. All Rights Reserved.

"""Errors raised by the solver, the diagnostics and the run orchestration."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Sequence

if TYPE_CHECKING:
    from .timeloop import RunTrace


class PbeDgError(Exception):
    """Base class of every error raised by pbedg."""


class InvalidArgumentError(PbeDgError, ValueError):
    pass


class OutOfDomainError(PbeDgError, ValueError):
    """A coordinate lies outside the truncated domain (0, L]."""

    def __init__(self, message: str, coordinate: float):
        super().__init__(message)
        self.coordinate = coordinate


class ProjectionError(PbeDgError):
    """The initial data are not finite at a projection point."""

    def __init__(self, message: str, cell: int):
        super().__init__(message)
        self.cell = cell


class DivergedStateError(PbeDgError):
    """A flux evaluation produced a non-finite value.

    The location is reported as a cell index and, for interior fluxes, the Gauss point index.
    Interface fluxes report ``gauss_point=None`` and the interface index as ``cell``.
    """

    def __init__(self, message: str, cell: int, gauss_point: int | None = None):
        super().__init__(message)
        self.cell = cell
        self.gauss_point = gauss_point


class InvalidStateError(PbeDgError):
    pass


class UnresolvableInitialDataError(PbeDgError):
    """The projected initial data have nonpositive averages the mesh cannot resolve."""

    def __init__(self, message: str, cells: Sequence[int]):
        super().__init__(message)
        self.cells = list(cells)


class NonconvergenceError(PbeDgError):
    """The time loop exceeded the allowed number of step halvings."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


class ValidityWindowError(PbeDgError, ValueError):
    pass


class AnalyticNotAvailableError(PbeDgError, NotImplementedError):
    pass


class OracleFailureError(PbeDgError):
    """The residual oracle's adaptive quadrature did not converge."""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message)
        self.details = details


class ConfigError(PbeDgError, ValueError):
    """A configuration document failed validation.

    ``path`` is the dotted location of the offending field, empty for the document root.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
