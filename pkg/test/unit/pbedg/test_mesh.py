# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import math

import numpy as np
import pytest

from pbedg.exceptions import InvalidArgumentError, OutOfDomainError
from pbedg.mesh import (
    MAX_QUADRATURE_ORDER,
    build_geometric_mesh,
    gauss_points,
    gauss_points_of_cell,
    gauss_rule,
    locate_cell,
    locate_cells,
    mesh_from_interfaces,
)


class TestGeometricMesh:
    def test_ratio_is_two_for_thirty_cells(self) -> None:
        # WHEN
        mesh = build_geometric_mesh(30, 1e-3)

        # THEN
        assert mesh.ratio == 2.0
        assert mesh.interfaces[0] == 0.0
        assert mesh.interfaces[1] == 1e-3
        assert mesh.interfaces[2] == pytest.approx(2e-3, rel=1e-14)
        assert mesh.n_cells == 30

    def test_span(self) -> None:
        # WHEN
        mesh = build_geometric_mesh(60, 1e-6)

        # THEN
        assert mesh.interfaces[-1] / mesh.interfaces[1] == pytest.approx(2**29.5, rel=1e-12)

    def test_geometric_growth_and_widths(self) -> None:
        # GIVEN
        mesh = build_geometric_mesh(15, 1e-3)

        # THEN
        ratios = mesh.interfaces[2:] / mesh.interfaces[1:-1]
        np.testing.assert_allclose(ratios, mesh.ratio, rtol=1e-12)
        assert np.all(mesh.widths > 0.0)
        assert np.sum(mesh.widths) == pytest.approx(mesh.length, rel=1e-14)
        np.testing.assert_allclose(mesh.pivots, 0.5 * (mesh.interfaces[:-1] + mesh.interfaces[1:]))

    def test_doubling_halves_the_exponent(self) -> None:
        coarse = build_geometric_mesh(15, 1e-3)
        fine = build_geometric_mesh(30, 1e-3)
        assert fine.ratio is not None and coarse.ratio is not None
        assert fine.ratio**2 == pytest.approx(coarse.ratio, rel=1e-12)

    @pytest.mark.parametrize(
        "n_cells, x0",
        [
            pytest.param(1, 1e-3, id="one-cell"),
            pytest.param(10, 0.0, id="zero-x0"),
            pytest.param(10, -1.0, id="negative-x0"),
        ],
    )
    def test_invalid_arguments(self, n_cells: int, x0: float) -> None:
        with pytest.raises(InvalidArgumentError):
            build_geometric_mesh(n_cells, x0)

    def test_interfaces_must_increase(self) -> None:
        with pytest.raises(InvalidArgumentError):
            mesh_from_interfaces([0.0, 1.0, 1.0])
        with pytest.raises(InvalidArgumentError):
            mesh_from_interfaces([0.5, 1.0])

    def test_mesh_is_read_only(self) -> None:
        mesh = mesh_from_interfaces([0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            mesh.interfaces[1] = 3.0

    def test_to_dict(self) -> None:
        mesh = build_geometric_mesh(30, 1e-3)
        document = mesh.to_dict()
        assert {key: document[key] for key in ("N", "x0", "r")} == {"N": 30, "x0": 1e-3, "r": 2.0}
        assert document["interfaces"][:2] == [0.0, 1e-3]
        assert document["interfaces"][-1] == mesh.length
        assert len(document["interfaces"]) == 31


class TestGaussRule:
    def test_midpoint(self) -> None:
        rule = gauss_rule(1)
        np.testing.assert_allclose(rule.nodes, [0.0], atol=1e-15)
        np.testing.assert_allclose(rule.weights, [2.0], rtol=1e-15)

    def test_two_points(self) -> None:
        rule = gauss_rule(2)
        np.testing.assert_allclose(rule.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-14)
        np.testing.assert_allclose(rule.weights, [1.0, 1.0], rtol=1e-14)
        assert np.dot(rule.weights, rule.nodes**2) == pytest.approx(2.0 / 3.0, rel=1e-14)

    @pytest.mark.parametrize("order", range(1, MAX_QUADRATURE_ORDER + 1))
    def test_exactness(self, order: int) -> None:
        # GIVEN
        rule = gauss_rule(order)

        # THEN
        assert np.sum(rule.weights) == pytest.approx(2.0, abs=1e-14)
        assert np.all(rule.weights > 0.0)
        assert np.all(np.diff(rule.nodes) > 0.0)
        assert np.all(np.abs(rule.nodes) < 1.0)
        np.testing.assert_array_equal(rule.nodes, -rule.nodes[::-1])
        for p in range(2 * order):
            exact = 2.0 / (p + 1) if p % 2 == 0 else 0.0
            assert np.dot(rule.weights, rule.nodes**p) == pytest.approx(exact, rel=1e-13, abs=1e-14)

    @pytest.mark.parametrize("order", [0, MAX_QUADRATURE_ORDER + 1])
    def test_order_out_of_range(self, order: int) -> None:
        with pytest.raises(InvalidArgumentError):
            gauss_rule(order)

    def test_rule_is_cached(self) -> None:
        assert gauss_rule(5) is gauss_rule(5)

    @pytest.mark.parametrize("order", range(1, MAX_QUADRATURE_ORDER + 1))
    def test_newton_nodes_match_the_eigenvalue_rule(self, order: int) -> None:
        rule = gauss_rule(order)
        nodes, weights = np.polynomial.legendre.leggauss(order)
        np.testing.assert_allclose(rule.nodes, nodes, rtol=0.0, atol=1e-14)
        np.testing.assert_allclose(rule.weights, weights, rtol=1e-12)


class TestLocateCell:
    @pytest.fixture()
    def mesh(self):
        return build_geometric_mesh(30, 1e-3)

    def test_interface_belongs_to_left_cell(self, mesh) -> None:
        for j in range(mesh.n_cells):
            assert locate_cell(mesh, float(mesh.interfaces[j + 1])) == j

    def test_pivot(self, mesh) -> None:
        assert locate_cell(mesh, float(mesh.pivots[3])) == 3

    @pytest.mark.parametrize("x", [0.0, -1.0, math.inf])
    def test_outside(self, mesh, x: float) -> None:
        with pytest.raises(OutOfDomainError) as raised:
            locate_cell(mesh, x)
        assert raised.value.coordinate == x

    def test_beyond_right_end(self, mesh) -> None:
        with pytest.raises(OutOfDomainError):
            locate_cell(mesh, mesh.length * (1.0 + 1e-12))

    def test_gauss_points_locate_to_their_cell(self, mesh) -> None:
        # GIVEN
        rule = gauss_rule(4)
        points = gauss_points(mesh, rule)

        # THEN
        assert np.all(points > 0.0)
        expected = np.broadcast_to(np.arange(mesh.n_cells)[:, None], points.shape)
        np.testing.assert_array_equal(locate_cells(mesh, points), expected)


class TestGaussPointsOfCell:
    def test_midpoint(self) -> None:
        mesh = mesh_from_interfaces([0.0, 2.0])
        np.testing.assert_allclose(gauss_points_of_cell(mesh, gauss_rule(1), 0), [1.0])

    def test_two_points(self) -> None:
        mesh = mesh_from_interfaces([0.0, 2.0])
        np.testing.assert_allclose(
            gauss_points_of_cell(mesh, gauss_rule(2), 0),
            [1.0 - 1.0 / math.sqrt(3.0), 1.0 + 1.0 / math.sqrt(3.0)],
            rtol=1e-14,
        )

    def test_first_cell_points_are_positive(self) -> None:
        mesh = build_geometric_mesh(120, 1e-6)
        assert np.all(gauss_points_of_cell(mesh, gauss_rule(20), 0) > 0.0)

    def test_invalid_cell(self) -> None:
        with pytest.raises(InvalidArgumentError):
            gauss_points_of_cell(mesh_from_interfaces([0.0, 1.0]), gauss_rule(1), 1)
