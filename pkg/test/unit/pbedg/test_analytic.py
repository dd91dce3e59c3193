# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, special

from pbedg.analytic import GEL_TIME, bessel_i1_scaled, solution, solution_names
from pbedg.diagnostics import pde_residual
from pbedg.exceptions import (
    AnalyticNotAvailableError,
    InvalidArgumentError,
    ValidityWindowError,
)
from pbedg.kernels import builtin


class TestBesselI1Scaled:
    @pytest.mark.parametrize("z", [0.1, 1.0, 10.0, 100.0])
    def test_matches_arbitrary_precision(self, z: float) -> None:
        expected = float(mpmath.besseli(1, z) * mpmath.exp(-z))
        assert float(bessel_i1_scaled(z)) == pytest.approx(expected, rel=1e-13)

    def test_known_value(self) -> None:
        assert float(bessel_i1_scaled(1.0)) == pytest.approx(0.2079104154, rel=1e-9)

    def test_zero(self) -> None:
        assert float(bessel_i1_scaled(0.0)) == 0.0

    def test_large_argument_stays_finite(self) -> None:
        value = float(bessel_i1_scaled(1e6))
        assert value == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * 1e6), rel=1e-6)

    def test_negative(self) -> None:
        with pytest.raises(InvalidArgumentError):
            bessel_i1_scaled(-1.0)


class TestSolutions:
    def test_names(self) -> None:
        assert solution_names() == [
            "binlin_brk",
            "binquad_brk",
            "const_agg",
            "coupled_steady",
            "coupled_transient",
            "prod_agg",
            "sum_agg",
        ]

    def test_unknown(self) -> None:
        with pytest.raises(InvalidArgumentError, match="Unsupported reference solution"):
            solution("nope")

    @pytest.mark.parametrize(
        "case_id", ["const_agg", "sum_agg", "binlin_brk", "binquad_brk", "coupled_steady"]
    )
    def test_initial_data(self, case_id: str) -> None:
        x = np.array([0.01, 1.0, 7.0])
        np.testing.assert_allclose(solution(case_id).number_density(0.0, x), np.exp(-x), rtol=1e-14)

    def test_product_initial_data(self) -> None:
        x = np.array([0.01, 1.0, 7.0])
        np.testing.assert_array_equal(solution("prod_agg").number_density(0.0, x), np.exp(-x))

    def test_sum_kernel_against_direct_formula(self) -> None:
        # GIVEN
        t, x = 0.5, np.array([0.3, 1.0, 5.0])
        tau = 1.0 - math.exp(-t)
        root = math.sqrt(tau)

        # WHEN
        value = solution("sum_agg").number_density(t, x)

        # THEN
        direct = (1 - tau) / (x * root) * special.iv(1, 2 * x * root) * np.exp(-(1 + tau) * x)
        np.testing.assert_allclose(value, direct, rtol=1e-12)

    def test_sum_kernel_far_tail(self) -> None:
        value = float(solution("sum_agg").number_density(0.5, 500.0))
        assert 0.0 < value < 1e-25

    def test_product_series_at_a_single_point(self) -> None:
        # GIVEN
        t, x = 0.2, 1.5
        terms = [
            t**m * x ** (3 * m) / (math.factorial(m + 1) * math.factorial(2 * m + 1))
            for m in range(30)
        ]

        # WHEN
        value = float(solution("prod_agg").number_density(t, x))

        # THEN
        assert value == pytest.approx(math.exp(-(1 + t) * x) * sum(terms), rel=1e-12)

    def test_product_series_keeps_shape(self) -> None:
        x = np.linspace(0.1, 50.0, 12).reshape(3, 4)
        assert solution("prod_agg").number_density(0.3, x).shape == (3, 4)

    def test_mass_density(self) -> None:
        x = np.array([0.5, 2.0])
        np.testing.assert_allclose(
            solution("binlin_brk").mass_density(1.0, x), x * 4.0 * np.exp(-2.0 * x)
        )


class TestValidityWindow:
    def test_gel_time(self) -> None:
        assert solution("prod_agg").t_max == GEL_TIME == 0.5

    def test_product_after_gelation(self) -> None:
        with pytest.raises(ValidityWindowError):
            solution("prod_agg").number_density(0.6, 1.0)

    def test_negative_time(self) -> None:
        with pytest.raises(ValidityWindowError):
            solution("const_agg").number_density(-0.1, 1.0)

    def test_transient_coupled_problem(self) -> None:
        reference = solution("coupled_transient")
        assert reference.available is False
        with pytest.raises(AnalyticNotAvailableError):
            reference.number_density(0.1, 1.0)
        with pytest.raises(AnalyticNotAvailableError):
            reference.first_moment(0.1)


class TestMoments:
    @pytest.mark.parametrize(
        "case_id, t, expected",
        [
            pytest.param("const_agg", 2.0, 0.5, id="const_agg"),
            pytest.param("sum_agg", 1.0, math.exp(-1.0), id="sum_agg"),
            pytest.param("prod_agg", 0.4, 0.8, id="prod_agg"),
            pytest.param("binlin_brk", 0.5, 1.5, id="binlin_brk"),
            pytest.param("coupled_steady", 3.0, 1.0, id="coupled_steady"),
        ],
    )
    def test_zeroth_moment(self, case_id: str, t: float, expected: float) -> None:
        assert solution(case_id).moment(0, t) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize(
        "case_id, direction",
        [
            pytest.param("const_agg", -1.0, id="const_agg"),
            pytest.param("sum_agg", -1.0, id="sum_agg"),
            pytest.param("prod_agg", -1.0, id="prod_agg"),
            pytest.param("binlin_brk", 1.0, id="binlin_brk"),
            pytest.param("coupled_steady", 0.0, id="coupled_steady"),
        ],
    )
    def test_zeroth_moment_is_monotone(self, case_id: str, direction: float) -> None:
        # GIVEN
        reference = solution(case_id)
        times = np.linspace(0.0, min(10.0, reference.t_max), 41)

        # WHEN
        m0 = np.array([reference.moment(0, t) for t in times])

        # THEN
        assert m0[0] == pytest.approx(1.0, rel=1e-14)
        np.testing.assert_array_equal(np.sign(np.diff(m0)), direction)

    @pytest.mark.parametrize(
        "case_id, t",
        [
            pytest.param(case_id, t, id=f"{case_id}-{t}")
            for case_id in ("const_agg", "sum_agg", "binlin_brk", "binquad_brk", "coupled_steady")
            for t in (0.01, 0.5, 2.0)
            # the sum kernel tail decays like exp(-0.005 x) at t = 2
            if (case_id, t) != ("sum_agg", 2.0)
        ],
    )
    def test_first_moment_by_quadrature(self, case_id: str, t: float) -> None:
        reference = solution(case_id)
        assert reference.first_moment(t) == 1.0
        assert reference.moment(1, t, upper=400.0) == pytest.approx(1.0, rel=1e-7)

    def test_second_moment_by_quadrature(self) -> None:
        assert solution("const_agg").moment(2, 1.0) == pytest.approx(3.0, rel=1e-7)

    def test_zeroth_moment_by_quadrature(self) -> None:
        # GIVEN
        t = 0.5
        reference = solution("binquad_brk")

        # WHEN
        m0, _ = integrate.quad(
            lambda x: float(reference.number_density(t, x)), 0.0, np.inf, epsrel=1e-12
        )

        # THEN
        assert reference.moment(0, t) == pytest.approx(m0, rel=1e-7)

    @pytest.mark.parametrize(
        "case_id, t",
        [
            pytest.param("const_agg", 0.5, id="const_agg"),
            pytest.param("sum_agg", 0.5, id="sum_agg"),
            pytest.param("prod_agg", 0.1, id="prod_agg"),
            pytest.param("binlin_brk", 0.5, id="binlin_brk"),
            pytest.param("binquad_brk", 0.5, id="binquad_brk"),
            pytest.param("coupled_steady", 0.5, id="coupled_steady"),
        ],
    )
    def test_mass_is_one(self, case_id: str, t: float) -> None:
        reference = solution(case_id)
        assert reference.first_moment(t) == 1.0
        assert reference.moment(1, t, upper=200.0) == pytest.approx(1.0, rel=1e-7)


class TestResidual:
    @pytest.mark.parametrize(
        "case_id, kernel_id, times",
        [
            pytest.param("const_agg", "const_agg", (0.1, 0.5, 1.0), id="const_agg"),
            pytest.param("sum_agg", "sum_agg", (0.1, 0.5, 1.0), id="sum_agg"),
            pytest.param("prod_agg", "prod_agg", (0.025, 0.1, 0.25), id="prod_agg"),
            pytest.param("binlin_brk", "binlin_brk", (0.1, 0.5, 1.0), id="binlin_brk"),
            pytest.param("binquad_brk", "binquad_brk", (0.1, 0.5, 1.0), id="binquad_brk"),
            pytest.param("coupled_steady", "coupled", (0.1, 0.5, 1.0), id="coupled_steady"),
        ],
    )
    @pytest.mark.parametrize("x", [0.25, 1.0, 4.0])
    def test_reference_solves_the_equation(
        self, case_id: str, kernel_id: str, times: tuple[float, ...], x: float
    ) -> None:
        reference, kernel_set = solution(case_id), builtin(kernel_id)
        for t in times:
            assert pde_residual(reference, kernel_set, t, x) <= 1e-6, f"t={t}"

    def test_residual_at_the_start_of_the_window(self) -> None:
        assert pde_residual(solution("binlin_brk"), builtin("binlin_brk"), 0.0, 1.0) <= 1e-6
