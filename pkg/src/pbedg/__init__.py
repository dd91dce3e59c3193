# Copyright pbe-dg contributors. All Rights Reserved.

"""Positivity preserving discontinuous Galerkin solver for population balance equations with
aggregation and breakage."""

from .basis import DGState, eval_state, project_initial, total_mass
from .exceptions import PbeDgError
from .kernels import KernelSet, builtin
from .limiter import LimiterMode, limit_state
from .mesh import Mesh, build_geometric_mesh, gauss_rule
from .scheme import SchemeContext, assemble_rhs, cfl_max_dt, euler_update
from .timeloop import RunConfig, SspMethod, advance, initialize

__all__ = [
    "DGState",
    "KernelSet",
    "LimiterMode",
    "Mesh",
    "PbeDgError",
    "RunConfig",
    "SchemeContext",
    "SspMethod",
    "advance",
    "assemble_rhs",
    "build_geometric_mesh",
    "builtin",
    "cfl_max_dt",
    "euler_update",
    "eval_state",
    "gauss_rule",
    "initialize",
    "limit_state",
    "project_initial",
    "total_mass",
]
