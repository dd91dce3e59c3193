# Copyright pbe-dg contributors. All Rights Reserved.

"""Aggregation kernels, breakage and selection functions, and the flux integrands A and B."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import InvalidArgumentError

_logger = logging.getLogger(__name__)

BivariateFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
UnivariateFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelSet:
    """Aggregation kernel K(x, y), breakage function b(x, y) and selection function S(x).

    A kernel set without an aggregation kernel is a pure breakage problem and vice versa. The
    breakage function is only consulted for daughters smaller than the parent (x < y).
    """

    name: str
    aggregation: BivariateFunction | None = None
    breakage: BivariateFunction | None = None
    selection: UnivariateFunction | None = None
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if (self.breakage is None) != (self.selection is None):
            raise InvalidArgumentError("breakage needs both a breakage and a selection function")

    @property
    def has_aggregation(self) -> bool:
        return self.aggregation is not None

    @property
    def has_breakage(self) -> bool:
        return self.breakage is not None

    def aggregation_integrand(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """A(u, v) = K(u, v) / v."""
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        _check_positive(v)
        if self.aggregation is None:
            return np.zeros(v.shape)
        return self.aggregation(u, v) / v

    def breakage_integrand(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """B(u, v) = u * b(u, v) * S(v) / v, zero for u >= v."""
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        _check_positive(v)
        if self.breakage is None or self.selection is None:
            return np.zeros(v.shape)
        below = u < v
        daughters = np.where(below, u, 0.5 * v)
        values = daughters * self.breakage(daughters, v) * self.selection(v) / v
        return np.where(below, values, 0.0)


def _check_positive(v: np.ndarray) -> None:
    if np.any(v <= 0.0):
        raise InvalidArgumentError("kernel integrands require v > 0")


def constant_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones(np.broadcast(x, y).shape)


def sum_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x + y


def product_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x * y


def binary_breakage(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """b(x, y) = 2 / y."""
    return np.broadcast_to(2.0 / y, np.broadcast(x, y).shape)


def hill_ng_breakage(p: float, m: float) -> BivariateFunction:
    """Hill–Ng multiple breakage function with p >= 2 daughters and shape parameter m >= 0.

    b(x, y) = p * C * x^m (y - x)^q / y^(p m + p - 1) with q = m + (m + 1)(p - 2) and
    C = Gamma(m + (m + 1)(p - 1) + 1) / (Gamma(m + 1) Gamma(q + 1)), so that the daughter count
    int_0^y b dx is p and the daughter mass int_0^y x b dx is y.
    """
    if p < 2:
        raise InvalidArgumentError(f"Hill–Ng breakage needs p >= 2, got {p}")
    if m < 0:
        raise InvalidArgumentError(f"Hill–Ng breakage needs m >= 0, got {m}")
    q = m + (m + 1.0) * (p - 2.0)
    log_coefficient = (
        np.log(p) + gammaln(m + (m + 1.0) * (p - 1.0) + 1.0) - gammaln(m + 1.0) - gammaln(q + 1.0)
    )
    parent_power = p * m + p - 1.0

    def breakage(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        gap = np.clip(y - x, 0.0, None)
        with np.errstate(divide="ignore"):
            log_b = log_coefficient + xlogy(m, x) + xlogy(q, gap) - parent_power * np.log(y)
        return np.where(x < y, np.exp(log_b), 0.0)

    return breakage


def power_selection(power: float, scale: float = 1.0) -> UnivariateFunction:
    """S(x) = scale * x^power."""

    def selection(x: np.ndarray) -> np.ndarray:
        return scale * np.asarray(x, dtype=float) ** power

    return selection


def _const_agg(**_: Any) -> KernelSet:
    return KernelSet("const_agg", aggregation=constant_kernel)


def _sum_agg(**_: Any) -> KernelSet:
    return KernelSet("sum_agg", aggregation=sum_kernel)


def _prod_agg(**_: Any) -> KernelSet:
    return KernelSet("prod_agg", aggregation=product_kernel)


def _binlin_brk(**_: Any) -> KernelSet:
    return KernelSet("binlin_brk", breakage=binary_breakage, selection=power_selection(1.0))


def _binquad_brk(**_: Any) -> KernelSet:
    return KernelSet("binquad_brk", breakage=binary_breakage, selection=power_selection(2.0))


def _hillng_brk(p: float = 4.0, m: float = 2.0, **_: Any) -> KernelSet:
    return KernelSet(
        "hillng_brk",
        breakage=hill_ng_breakage(p, m),
        selection=power_selection(2.0),
        params={"p": p, "m": m},
    )


def _coupled(**_: Any) -> KernelSet:
    return KernelSet(
        "coupled",
        aggregation=constant_kernel,
        breakage=binary_breakage,
        selection=power_selection(1.0, scale=0.5),
    )


_BUILTINS: dict[str, Callable[..., KernelSet]] = {
    "const_agg": _const_agg,
    "sum_agg": _sum_agg,
    "prod_agg": _prod_agg,
    "binlin_brk": _binlin_brk,
    "binquad_brk": _binquad_brk,
    "hillng_brk": _hillng_brk,
    "coupled": _coupled,
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def builtin(case_id: str, **params: Any) -> KernelSet:
    """Returns the builtin kernel set registered under ``case_id``.

    Args:
        case_id: one of ``builtin_names()``.
        **params: kernel parameters, e.g. ``p`` and ``m`` for ``hillng_brk``.

    Raises:
        InvalidArgumentError: for an unknown id or invalid parameters.
    """
    try:
        factory = _BUILTINS[case_id]
    except KeyError:
        raise InvalidArgumentError(f"Unsupported kernel set: {case_id}") from None
    return factory(**params)
