# Copyright pbe-dg contributors. All Rights Reserved.

"""Catalog of the benchmark problems: kernels, domains, initial data and reference solutions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.special import ndtr

from . import analytic, kernels
from .basis import MassDensity
from .exceptions import InvalidArgumentError
from .kernels import KernelSet
from .mesh import SPAN_EXPONENT, Mesh, build_geometric_mesh

_logger = logging.getLogger(__name__)

AGGREGATION_X0 = 1e-3
BREAKAGE_X0 = 1e-6
DEFAULT_T_END = 0.01
MAX_CLIPPED_MASS = 1e-6


def exponential_mass(x: np.ndarray) -> np.ndarray:
    """n(0, x) = x exp(-x)."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(-x)


def gamma_mass(x: np.ndarray) -> np.ndarray:
    """n(0, x) = 4 x^2 exp(-2x)."""
    x = np.asarray(x, dtype=float)
    return 4.0 * x * x * np.exp(-2.0 * x)


def normal_mass(mu: float = 1.0, sigma: float = 0.2) -> MassDensity:
    """Normal density with mean ``mu`` and deviation ``sigma``, restricted to x > 0.

    Raises:
        InvalidArgumentError: if sigma <= 0 or the mass cut off at x = 0 exceeds 1e-6.
    """
    if not sigma > 0.0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    clipped = float(ndtr(-mu / sigma))
    if clipped >= MAX_CLIPPED_MASS:
        raise InvalidArgumentError(
            f"normal initial data with mu={mu}, sigma={sigma} lose {clipped:.2e} of their mass "
            "below x = 0"
        )
    scale = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def density(x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - mu) / sigma
        return scale * np.exp(-0.5 * z * z)

    return density


@dataclass(frozen=True)
class CaseSpec:
    """One benchmark problem.

    Attributes:
        case_id: catalog key, e.g. ``1b``.
        title: short description for reports.
        kernel_id: builtin kernel set name.
        x0: right end of the first cell.
        initial: factory of n(0, x) taking the case parameters.
        analytic_id: reference solution name, None when no closed form exists.
        zeroth_moment: closed-form M_0(t) when known.
        params: default case parameters, overridable per run.
    """

    case_id: str
    title: str
    kernel_id: str
    x0: float
    initial: Callable[..., MassDensity]
    analytic_id: str | None = None
    zeroth_moment: Callable[[float], float] | None = None
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def has_analytic(self) -> bool:
        if self.analytic_id is None:
            return False
        return analytic.solution(self.analytic_id).available

    def mesh(
        self, n_cells: int, x0: float | None = None, span_exponent: float = SPAN_EXPONENT
    ) -> Mesh:
        return build_geometric_mesh(n_cells, self.x0 if x0 is None else x0, span_exponent)

    def merged_params(self, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
        unknown = set(overrides or ()) - set(self.params)
        if unknown:
            raise InvalidArgumentError(
                f"case {self.case_id} has no parameters {sorted(unknown)}"
            )
        return {**self.params, **(overrides or {})}

    def kernel_set(self, overrides: dict[str, Any] | None = None) -> KernelSet:
        return kernels.builtin(self.kernel_id, **self.merged_params(overrides))

    def initial_density(self, overrides: dict[str, Any] | None = None) -> MassDensity:
        return self.initial(**self.merged_params(overrides))

    def reference(self) -> analytic.AnalyticSolution | None:
        """Installed reference solution, or None so callers fall back to self-convergence."""
        if not self.has_analytic:
            return None
        assert self.analytic_id is not None
        return analytic.solution(self.analytic_id)


def _fixed(density: MassDensity) -> Callable[..., MassDensity]:
    def factory(**_: Any) -> MassDensity:
        return density

    return factory


def _normal(mu: float = 1.0, sigma: float = 0.2, **_: Any) -> MassDensity:
    return normal_mass(mu, sigma)


_CASES: dict[str, CaseSpec] = {
    spec.case_id: spec
    for spec in (
        CaseSpec(
            "1a",
            "constant aggregation",
            "const_agg",
            AGGREGATION_X0,
            _fixed(exponential_mass),
            analytic_id="const_agg",
            zeroth_moment=lambda t: 2.0 / (2.0 + t),
        ),
        CaseSpec(
            "1b",
            "sum aggregation",
            "sum_agg",
            AGGREGATION_X0,
            _fixed(exponential_mass),
            analytic_id="sum_agg",
            zeroth_moment=lambda t: math.exp(-t),
        ),
        CaseSpec(
            "1c",
            "product aggregation",
            "prod_agg",
            AGGREGATION_X0,
            _fixed(exponential_mass),
            analytic_id="prod_agg",
            zeroth_moment=lambda t: 1.0 - 0.5 * t if t <= analytic.GEL_TIME else math.nan,
        ),
        CaseSpec(
            "2a",
            "binary breakage, linear selection",
            "binlin_brk",
            BREAKAGE_X0,
            _fixed(exponential_mass),
            analytic_id="binlin_brk",
            zeroth_moment=lambda t: 1.0 + t,
        ),
        CaseSpec(
            "2b",
            "binary breakage, quadratic selection",
            "binquad_brk",
            BREAKAGE_X0,
            _fixed(exponential_mass),
            analytic_id="binquad_brk",
        ),
        CaseSpec(
            "3",
            "multiple breakage, quadratic selection",
            "hillng_brk",
            BREAKAGE_X0,
            _normal,
            params={"p": 4.0, "m": 2.0, "mu": 1.0, "sigma": 0.2},
        ),
        CaseSpec(
            "4a",
            "aggregation and breakage, steady state",
            "coupled",
            AGGREGATION_X0,
            _fixed(exponential_mass),
            analytic_id="coupled_steady",
            zeroth_moment=lambda t: 1.0,
        ),
        CaseSpec(
            "4b",
            "aggregation and breakage, constant particle number",
            "coupled",
            AGGREGATION_X0,
            _fixed(gamma_mass),
            analytic_id="coupled_transient",
            zeroth_moment=lambda t: 1.0,
        ),
    )
}


def case_ids() -> list[str]:
    return list(_CASES)


def get_case(case_id: str) -> CaseSpec:
    """Looks up a benchmark problem.

    Raises:
        InvalidArgumentError: for an unknown id.
    """
    try:
        return _CASES[case_id]
    except KeyError:
        raise InvalidArgumentError(
            f"Unsupported case: {case_id}. Known cases: {', '.join(_CASES)}"
        ) from None
