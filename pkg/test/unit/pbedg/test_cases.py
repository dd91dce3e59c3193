# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from pbedg.cases import case_ids, get_case, normal_mass
from pbedg.exceptions import InvalidArgumentError


def test_case_ids() -> None:
    assert case_ids() == ["1a", "1b", "1c", "2a", "2b", "3", "4a", "4b"]


def test_unknown_case() -> None:
    with pytest.raises(InvalidArgumentError, match="Unsupported case: 5"):
        get_case("5")


class TestCaseSpec:
    @pytest.mark.parametrize(
        "case_id, kernel_id, has_analytic",
        [
            pytest.param("1a", "const_agg", True, id="1a"),
            pytest.param("1b", "sum_agg", True, id="1b"),
            pytest.param("1c", "prod_agg", True, id="1c"),
            pytest.param("2a", "binlin_brk", True, id="2a"),
            pytest.param("2b", "binquad_brk", True, id="2b"),
            pytest.param("3", "hillng_brk", False, id="3"),
            pytest.param("4a", "coupled", True, id="4a"),
            pytest.param("4b", "coupled", False, id="4b"),
        ],
    )
    def test_catalog(self, case_id: str, kernel_id: str, has_analytic: bool) -> None:
        # GIVEN
        case = get_case(case_id)

        # THEN
        assert case.kernel_set().name == kernel_id
        assert case.has_analytic is has_analytic
        assert (case.reference() is not None) is has_analytic

    @pytest.mark.parametrize("case_id", ["1a", "2a", "3", "4b"])
    def test_initial_mass_is_one(self, case_id: str) -> None:
        # GIVEN
        density = get_case(case_id).initial_density()

        # WHEN
        mass, _ = integrate.quad(lambda x: float(density(np.asarray(x))), 0.0, 50.0, limit=200)

        # THEN
        assert mass == pytest.approx(1.0, rel=1e-6)

    def test_zeroth_moment_of_the_product_case_ends_at_gelation(self) -> None:
        zeroth_moment = get_case("1c").zeroth_moment
        assert zeroth_moment is not None
        assert zeroth_moment(0.5) == pytest.approx(0.75)
        assert math.isnan(zeroth_moment(0.6))

    def test_mesh(self) -> None:
        # GIVEN
        case = get_case("2a")

        # THEN
        assert case.mesh(10).x0 == 1e-6
        assert case.mesh(10, x0=0.1).x0 == 0.1
        assert case.mesh(10, span_exponent=10.0).ratio == pytest.approx(2.0)

    def test_parameter_overrides(self) -> None:
        # GIVEN
        case = get_case("3")

        # WHEN
        kernel_set = case.kernel_set({"p": 3.0})

        # THEN
        assert kernel_set.params["p"] == 3.0
        assert case.params["p"] == 4.0

    def test_unknown_parameter(self) -> None:
        with pytest.raises(InvalidArgumentError, match="has no parameters"):
            get_case("1a").kernel_set({"p": 3.0})


class TestNormalMass:
    def test_peak(self) -> None:
        density = normal_mass(2.0, 0.3)
        peak = 1.0 / (0.3 * math.sqrt(2 * math.pi))
        assert float(density(np.asarray(2.0))) == pytest.approx(peak)

    @pytest.mark.parametrize(
        "mu, sigma",
        [
            pytest.param(1.0, 0.0, id="zero-sigma"),
            pytest.param(0.5, 0.2, id="clipped-mass"),
            pytest.param(2.0, 0.5, id="clipped-tail"),
        ],
    )
    def test_invalid(self, mu: float, sigma: float) -> None:
        with pytest.raises(InvalidArgumentError):
            normal_mass(mu, sigma)
