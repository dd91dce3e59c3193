# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import math

import numpy as np
import pytest

from pbedg.basis import DGState, legendre_vandermonde, mass_diagonal
from pbedg.exceptions import DivergedStateError, InvalidArgumentError, InvalidStateError
from pbedg.kernels import builtin
from pbedg.mesh import build_geometric_mesh, mesh_from_interfaces
from pbedg.scheme import SchemeContext, assemble_rhs, cfl_max_dt, euler_update


def positive_state(context: SchemeContext, rng: np.random.Generator) -> DGState:
    """State whose values at the Gauss points of every cell are drawn from [0.05, 1]."""
    rule = context.rule
    values = rng.uniform(0.05, 1.0, size=(context.mesh.n_cells, rule.order))
    test = legendre_vandermonde(rule.nodes, context.degree) * rule.weights[:, None]
    return DGState((values @ test) / mass_diagonal(context.degree))


class TestSchemeContext:
    def test_default_quadrature_order(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("const_agg"), 2)
        assert context.rule.order == 3
        assert context.tables is None

    def test_explicit_quadrature_order(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("binlin_brk"), 1, 4)
        assert context.rule.order == 4
        assert context.tables is not None

    def test_negative_degree(self) -> None:
        with pytest.raises(InvalidArgumentError):
            SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("const_agg"), -1)


class TestAssembleRhs:
    @pytest.fixture()
    def context(self) -> SchemeContext:
        mesh = build_geometric_mesh(8, 0.05, span_exponent=8.0)
        return SchemeContext.create(mesh, builtin("coupled"), 2)

    def test_average_update_is_the_flux_difference(self, context) -> None:
        # GIVEN
        state = positive_state(context, np.random.default_rng(1))

        # WHEN
        rhs = assemble_rhs(state, context)

        # THEN
        fluxes = rhs.interface_fluxes
        expected = -(fluxes[1:] - fluxes[:-1]) / context.mesh.widths
        np.testing.assert_allclose(rhs.dcoeffs[:, 0], expected, rtol=1e-12, atol=1e-12)
        assert fluxes[0] == 0.0
        assert rhs.interior_fluxes.shape == (8, 3)

    def test_shape_mismatch(self, context) -> None:
        with pytest.raises(InvalidArgumentError):
            assemble_rhs(DGState(np.ones((8, 2))), context)

    def test_non_finite_state(self, context) -> None:
        coeffs = np.ones((8, 3))
        coeffs[3, 0] = np.nan
        with pytest.raises(DivergedStateError):
            assemble_rhs(DGState(coeffs), context)


class TestEulerUpdate:
    def test_step(self) -> None:
        # GIVEN
        mesh = build_geometric_mesh(4, 0.1)
        context = SchemeContext.create(mesh, builtin("binlin_brk"), 0)
        state = DGState(np.ones((4, 1)), time=1.0)
        rhs = assemble_rhs(state, context)

        # WHEN
        updated = euler_update(state, rhs, 0.25)

        # THEN
        assert updated.time == 1.25
        np.testing.assert_allclose(updated.coeffs, state.coeffs + 0.25 * rhs.dcoeffs)
        np.testing.assert_array_equal(state.coeffs, 1.0)

    def test_zero_step_copies(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("binlin_brk"), 0)
        state = DGState(np.ones((4, 1)))
        updated = euler_update(state, assemble_rhs(state, context), 0.0)
        assert updated is not state
        np.testing.assert_array_equal(updated.coeffs, state.coeffs)

    def test_negative_step(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("binlin_brk"), 0)
        state = DGState(np.ones((4, 1)))
        with pytest.raises(InvalidArgumentError):
            euler_update(state, assemble_rhs(state, context), -1.0)


class TestCflMaxDt:
    def test_binary_breakage_on_two_cells(self) -> None:
        # GIVEN
        mesh = mesh_from_interfaces([0.0, 0.5, 1.0])
        context = SchemeContext.create(mesh, builtin("binlin_brk"), 0)
        state = DGState(np.ones((2, 1)))

        # WHEN
        bound = cfl_max_dt(state, context)

        # THEN
        assert bound == pytest.approx(3.0, rel=1e-14)
        assert context.breakage_cfl_bound == pytest.approx(3.0, rel=1e-14)

    def test_bound_keeps_averages_positive(self) -> None:
        # GIVEN
        mesh = build_geometric_mesh(15, 1e-3)
        context = SchemeContext.create(mesh, builtin("coupled"), 1)
        rng = np.random.default_rng(2024)

        for _ in range(100):
            state = positive_state(context, rng)

            # WHEN
            dt = 0.99 * cfl_max_dt(state, context)
            updated = euler_update(state, assemble_rhs(state, context), dt)

            # THEN
            assert np.all(updated.coeffs[:, 0] > 0.0)

    def test_far_larger_steps_lose_positivity(self) -> None:
        # GIVEN
        mesh = mesh_from_interfaces([0.0, 0.5, 1.0])
        context = SchemeContext.create(mesh, builtin("binlin_brk"), 0)
        state = DGState(np.ones((2, 1)))
        dt = 100.0 * cfl_max_dt(state, context)

        # WHEN
        updated = euler_update(state, assemble_rhs(state, context), dt)

        # THEN
        assert np.any(updated.coeffs[:, 0] < 0.0)

    def test_zero_state(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("const_agg"), 0)
        assert cfl_max_dt(DGState(np.zeros((4, 1))), context) == math.inf

    def test_negative_average(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("const_agg"), 0)
        coeffs = np.ones((4, 1))
        coeffs[2, 0] = -1e-3
        with pytest.raises(InvalidStateError):
            cfl_max_dt(DGState(coeffs), context)

    def test_cached_bound_is_for_pure_breakage(self) -> None:
        context = SchemeContext.create(build_geometric_mesh(4, 0.1), builtin("coupled"), 0)
        with pytest.raises(InvalidArgumentError):
            _ = context.breakage_cfl_bound
