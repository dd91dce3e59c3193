# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import json
import os
from typing import Any

import pytest

from pbedg.config import (
    DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
    Acceptance,
    RunRequest,
    load_document,
    load_request,
    resolve_out_dir,
    validate_document,
)
from pbedg.exceptions import ConfigError
from pbedg.limiter import LimiterMode
from pbedg.timeloop import SspMethod


class TestValidateDocument:
    def test_minimal(self) -> None:
        validate_document({"case": "1a"})

    @pytest.mark.parametrize(
        "document, path",
        [
            pytest.param({}, "", id="missing-case"),
            pytest.param({"case": "9"}, "case", id="unknown-case"),
            pytest.param({"case": "1a", "rk": "rk4"}, "rk", id="unknown-method"),
            pytest.param({"case": "1a", "N": [0]}, "N.0", id="empty-mesh"),
            pytest.param({"case": "1a", "k": [9]}, "k.0", id="degree-too-high"),
            pytest.param({"case": "1a", "dt": 0}, "dt", id="zero-dt"),
            pytest.param({"case": "1a", "pairs": [[10]]}, "pairs.0", id="short-pair"),
            pytest.param(
                {"case": "1a", "acceptance": {"eoc_h": [1.5]}}, "acceptance.eoc_h", id="range"
            ),
            pytest.param({"case": "1a", "typo": 1}, "", id="unknown-key"),
        ],
    )
    def test_invalid(self, document: dict[str, Any], path: str) -> None:
        # WHEN
        with pytest.raises(ConfigError) as raised:
            validate_document(document)

        # THEN
        assert raised.value.path == path


class TestRunRequest:
    def test_defaults(self) -> None:
        # WHEN
        request = RunRequest.from_document({"case": "1a"})

        # THEN
        assert request.grid == ((15, 1), (30, 1), (60, 1))
        assert request.paired is False
        assert request.method is SspMethod.EULER
        assert request.limiter_mode is LimiterMode.GAUSS_ONLY
        assert request.reference == "auto"
        assert request.acceptance.empty

    def test_grid_is_the_product_of_n_and_k(self) -> None:
        # WHEN
        request = RunRequest.from_document({"case": "2a", "N": [10, 20], "k": [0, 2]})

        # THEN
        assert request.grid == ((10, 0), (20, 0), (10, 2), (20, 2))
        assert request.degrees == [0, 2]
        assert request.sizes(2) == [10, 20]

    def test_pairs(self) -> None:
        # WHEN
        request = RunRequest.from_document({"case": "2a", "pairs": [[40, 0], [10, 2]]})

        # THEN
        assert request.paired is True
        assert request.grid == ((40, 0), (10, 2))
        assert request.sizes(0) == [40]

    def test_pairs_conflict_with_lists(self) -> None:
        with pytest.raises(ConfigError) as raised:
            RunRequest.from_document({"case": "2a", "pairs": [[40, 0]], "N": [10]})
        assert raised.value.path == "pairs"

    def test_duplicate_runs(self) -> None:
        with pytest.raises(ConfigError, match="duplicate"):
            RunRequest.from_document({"case": "2a", "N": [10, 10]})

    def test_run_config(self) -> None:
        # GIVEN
        request = RunRequest.from_document(
            {
                "case": "1b",
                "t_end": 0.5,
                "dt": 1e-3,
                "rk": "ssp_rk3",
                "limiter_mode": "full",
                "use_cfl_bound": True,
                "cfl_safety": 0.5,
                "output_times": [0.25],
            }
        )

        # WHEN
        config = request.run_config()

        # THEN
        assert config.t_end == 0.5
        assert config.dt_initial == 1e-3
        assert config.method is SspMethod.SSP_RK3
        assert config.limiter_mode is LimiterMode.FULL
        assert config.use_cfl_bound is True
        assert config.cfl_safety == 0.5
        assert config.output_times == (0.25,)

    @pytest.mark.parametrize(
        "document",
        [
            pytest.param({"case": "1a"}, id="defaults"),
            pytest.param(
                {
                    "case": "3",
                    "pairs": [[20, 1], [40, 1]],
                    "Q": 4,
                    "x0": 1e-4,
                    "case_params": {"p": 3.0},
                    "acceptance": {"eoc_h": [1.5, 2.5], "max_mass_drift": 1e-10},
                    "reference": "self",
                    "jobs": 2,
                },
                id="everything",
            ),
        ],
    )
    def test_document_round_trip(self, document: dict[str, Any]) -> None:
        # GIVEN
        request = RunRequest.from_document(document)

        # WHEN
        restored = RunRequest.from_document(request.to_document())

        # THEN
        assert restored == request


class TestAcceptance:
    def test_round_trip(self) -> None:
        # GIVEN
        values = {"eoc_hd": [2.5, 3.5], "max_error_growth": 10.0}

        # WHEN
        acceptance = Acceptance.from_dict(values)

        # THEN
        assert acceptance.eoc_hd == (2.5, 3.5)
        assert acceptance.eoc_h is None
        assert acceptance.to_dict() == values
        assert not acceptance.empty


class TestLoadRequest:
    @pytest.fixture()
    def config_file(self, tmp_path) -> str:
        path = os.path.join(tmp_path, "run.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"case": "2a", "pairs": [[10, 0]], "t_end": 0.1}, f)
        return path

    def test_file_only(self, config_file: str) -> None:
        request = load_request(config_file)
        assert request.grid == ((10, 0),)
        assert request.t_end == 0.1

    def test_lists_override_pairs(self, config_file: str) -> None:
        # WHEN
        request = load_request(config_file, {"N": [20, 40], "k": None, "dt": 1e-4})

        # THEN
        assert request.grid == ((20, 1), (40, 1))
        assert request.dt == 1e-4
        assert request.t_end == 0.1

    def test_overrides_without_file(self) -> None:
        request = load_request(None, {"case": "1c", "pairs": [[12, 1]]})
        assert request.case_id == "1c"
        assert request.paired is True

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(ConfigError, match="cannot read configuration"):
            load_document(os.path.join(tmp_path, "missing.json"))

    def test_not_json(self, tmp_path) -> None:
        # GIVEN
        path = os.path.join(tmp_path, "run.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write("case: 1a\n")

        # THEN
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_document(path)


class TestResolveOutDir:
    def test_argument_wins(self, monkeypatch) -> None:
        monkeypatch.setenv(OUT_DIR_ENV, "from-env")
        assert resolve_out_dir("from-arg") == "from-arg"

    def test_environment(self, monkeypatch) -> None:
        monkeypatch.setenv(OUT_DIR_ENV, "from-env")
        assert resolve_out_dir(None) == "from-env"

    def test_default(self, monkeypatch) -> None:
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        assert resolve_out_dir(None) == DEFAULT_OUT_DIR
