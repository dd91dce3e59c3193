# Copyright pbe-dg contributors. All Rights Reserved.

"""Run configuration: a JSON document validated against ``schemas/init_data.schema.json``."""

from __future__ import annotations

import functools
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from jsonschema import Draft202012Validator

from .exceptions import ConfigError
from .limiter import LimiterMode
from .mesh import SPAN_EXPONENT
from .timeloop import RunConfig, SspMethod

_logger = logging.getLogger(__name__)

SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "schemas")
OUT_DIR_ENV = "PBEDG_OUT_DIR"
DEFAULT_OUT_DIR = "pbedg-out"

_DEFAULT_N = (15, 30, 60)
_DEFAULT_K = (1,)


@functools.lru_cache(maxsize=None)
def _validator(schema_name: str) -> Draft202012Validator:
    with open(os.path.join(SCHEMA_DIR, schema_name), encoding="utf-8") as schema_file:
        schema = json.load(schema_file)
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


def validate_document(document: Any, schema_name: str = "init_data.schema.json") -> None:
    """Validates ``document`` against one of the packaged schemas.

    Raises:
        ConfigError: for the first violation, in document order, with its dotted field path.
    """
    errors = sorted(
        _validator(schema_name).iter_errors(document), key=lambda e: [str(p) for p in e.path]
    )
    if errors:
        error = errors[0]
        raise ConfigError(error.message, ".".join(str(p) for p in error.absolute_path))


def load_document(path: str) -> dict[str, Any]:
    """Reads a configuration file.

    Raises:
        ConfigError: if the file cannot be read or is not JSON.
    """
    try:
        with open(path, encoding="utf-8") as config_file:
            return json.load(config_file)
    except OSError as e:
        raise ConfigError(f"cannot read configuration: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e}") from e


@dataclass(frozen=True)
class Acceptance:
    """Thresholds a run has to meet for a zero exit code; None disables a check."""

    eoc_h: tuple[float, float] | None = None
    eoc_hd: tuple[float, float] | None = None
    max_mass_drift: float | None = None
    max_error_growth: float | None = None
    max_moment_error: float | None = None

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> Acceptance:
        def pair(key: str) -> tuple[float, float] | None:
            return None if values.get(key) is None else tuple(values[key])  # type: ignore

        return cls(
            eoc_h=pair("eoc_h"),
            eoc_hd=pair("eoc_hd"),
            max_mass_drift=values.get("max_mass_drift"),
            max_error_growth=values.get("max_error_growth"),
            max_moment_error=values.get("max_moment_error"),
        )

    def to_dict(self) -> dict[str, Any]:
        values: dict[str, Any] = {
            "eoc_h": None if self.eoc_h is None else list(self.eoc_h),
            "eoc_hd": None if self.eoc_hd is None else list(self.eoc_hd),
            "max_mass_drift": self.max_mass_drift,
            "max_error_growth": self.max_error_growth,
            "max_moment_error": self.max_moment_error,
        }
        return {key: value for key, value in values.items() if value is not None}

    @property
    def empty(self) -> bool:
        return not self.to_dict()


@dataclass(frozen=True)
class RunRequest:
    """Validated contents of a configuration document."""

    case_id: str
    grid: tuple[tuple[int, int], ...] = tuple((n, k) for k in _DEFAULT_K for n in _DEFAULT_N)
    paired: bool = False
    quadrature_order: int | None = None
    t_end: float = 0.01
    dt: float = 1e-5
    method: SspMethod = SspMethod.EULER
    limiter: bool = True
    limiter_mode: LimiterMode = LimiterMode.GAUSS_ONLY
    use_cfl_bound: bool = False
    cfl_safety: float = 0.99
    max_halvings: int = 40
    allow_regrowth: bool = False
    output_times: tuple[float, ...] = ()
    x0: float | None = None
    span_exponent: float = SPAN_EXPONENT
    error_order: int = 16
    case_params: dict[str, float] = field(default_factory=dict)
    reference: str = "auto"
    acceptance: Acceptance = field(default_factory=Acceptance)
    jobs: int = 1
    moments: bool = True

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> RunRequest:
        """Validates ``document`` and fills in defaults.

        Raises:
            ConfigError: for schema violations or conflicting keys.
        """
        validate_document(dict(document))
        if "pairs" in document and ("N" in document or "k" in document):
            raise ConfigError("give either pairs or the N and k lists", "pairs")
        if "pairs" in document:
            grid = tuple((int(n), int(k)) for n, k in document["pairs"])
            paired = True
        else:
            n_values = document.get("N", _DEFAULT_N)
            k_values = document.get("k", _DEFAULT_K)
            grid = tuple((int(n), int(k)) for k in k_values for n in n_values)
            paired = False
        if len(set(grid)) != len(grid):
            raise ConfigError("duplicate (N, k) runs", "pairs" if paired else "N")
        defaults = cls(case_id=document["case"])
        return cls(
            case_id=document["case"],
            grid=grid,
            paired=paired,
            quadrature_order=document.get("Q"),
            t_end=float(document.get("t_end", defaults.t_end)),
            dt=float(document.get("dt", defaults.dt)),
            method=SspMethod(document.get("rk", defaults.method)),
            limiter=bool(document.get("limiter", defaults.limiter)),
            limiter_mode=LimiterMode(document.get("limiter_mode", defaults.limiter_mode)),
            use_cfl_bound=bool(document.get("use_cfl_bound", defaults.use_cfl_bound)),
            cfl_safety=float(document.get("cfl_safety", defaults.cfl_safety)),
            max_halvings=int(document.get("max_halvings", defaults.max_halvings)),
            allow_regrowth=bool(document.get("allow_regrowth", defaults.allow_regrowth)),
            output_times=tuple(float(t) for t in document.get("output_times", ())),
            x0=document.get("x0"),
            span_exponent=float(document.get("span_exponent", defaults.span_exponent)),
            error_order=int(document.get("error_order", defaults.error_order)),
            case_params={k: float(v) for k, v in document.get("case_params", {}).items()},
            reference=document.get("reference", defaults.reference),
            acceptance=Acceptance.from_dict(document.get("acceptance", {})),
            jobs=int(document.get("jobs", defaults.jobs)),
            moments=bool(document.get("moments", defaults.moments)),
        )

    @property
    def degrees(self) -> list[int]:
        return sorted({k for _, k in self.grid})

    def sizes(self, degree: int) -> list[int]:
        return sorted(n for n, k in self.grid if k == degree)

    def run_config(self) -> RunConfig:
        return RunConfig(
            t_end=self.t_end,
            dt_initial=self.dt,
            method=self.method,
            limiter_enabled=self.limiter,
            limiter_mode=self.limiter_mode,
            use_cfl_bound=self.use_cfl_bound,
            cfl_safety=self.cfl_safety,
            max_halvings=self.max_halvings,
            output_times=self.output_times,
            allow_regrowth=self.allow_regrowth,
        )

    def to_document(self) -> dict[str, Any]:
        """Configuration document that reproduces this request."""
        document: dict[str, Any] = {"case": self.case_id}
        if self.paired:
            document["pairs"] = [[n, k] for n, k in self.grid]
        else:
            document["N"] = sorted({n for n, _ in self.grid})
            document["k"] = self.degrees
        document.update(
            {
                "Q": self.quadrature_order,
                "t_end": self.t_end,
                "dt": self.dt,
                "rk": self.method.value,
                "limiter": self.limiter,
                "limiter_mode": self.limiter_mode.value,
                "use_cfl_bound": self.use_cfl_bound,
                "cfl_safety": self.cfl_safety,
                "max_halvings": self.max_halvings,
                "allow_regrowth": self.allow_regrowth,
                "output_times": list(self.output_times),
                "span_exponent": self.span_exponent,
                "error_order": self.error_order,
                "case_params": dict(self.case_params),
                "reference": self.reference,
                "acceptance": self.acceptance.to_dict(),
                "jobs": self.jobs,
                "moments": self.moments,
            }
        )
        if self.x0 is not None:
            document["x0"] = self.x0
        return document


def load_request(path: str | None, overrides: Mapping[str, Any] | None = None) -> RunRequest:
    """Reads an optional configuration file, applies ``overrides`` and validates the result.

    An override of ``N`` or ``k`` replaces a ``pairs`` list from the file.

    Raises:
        ConfigError: if the file is unreadable or the merged document is invalid.
    """
    document: dict[str, Any] = load_document(path) if path else {}
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    if "N" in overrides or "k" in overrides:
        document.pop("pairs", None)
    if "pairs" in overrides:
        document.pop("N", None)
        document.pop("k", None)
    document.update(overrides)
    _logger.debug("Configuration document: %s", document)
    return RunRequest.from_document(document)


def resolve_out_dir(out: str | None) -> str:
    """--out, then $PBEDG_OUT_DIR, then ./pbedg-out."""
    return out or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
