# Copyright pbe-dg contributors. All Rights Reserved.

from __future__ import annotations

import dataclasses
import logging
import os

from openjd.adaptor_runtime.adaptors import Adaptor, AdaptorDataValidators, SemanticVersion
from openjd.adaptor_runtime.adaptors.configuration import AdaptorConfiguration

from ..basis import DGState
from ..config import SCHEMA_DIR, RunRequest, resolve_out_dir
from ..reports import write_json
from ..runner import RunResult, run_single
from ..timeloop import steps_estimate

_logger = logging.getLogger(__name__)


class RunCancelledError(Exception):
    """Raised inside the time loop when the task was cancelled"""

    pass


class PbeAdaptor(Adaptor[AdaptorConfiguration]):
    """
    Adaptor that runs one (N, k) task of a benchmark battery per run.

    init_data is a case configuration document, run_data selects the number of cells N, the
    degree k and optionally the quadrature order and the output directory.
    """

    _request: RunRequest | None = None
    _cancel_requested: bool = False
    _total_steps: int = 1
    _steps_done: int = 0
    _last_progress: int = -1

    @property
    def integration_data_interface_version(self) -> SemanticVersion:
        return SemanticVersion(major=0, minor=1)

    def on_start(self) -> None:
        """
        Validates the case configuration shared by all tasks of the session.

        Raises:
            jsonschema.ValidationError: When init_data fails validation against the adaptor schema.
            jsonschema.SchemaError: When the adaptor schema itself is nonvalid.
            ConfigError: When init_data combines keys that cannot be used together.
        """
        validators = AdaptorDataValidators.for_adaptor(SCHEMA_DIR)
        validators.init_data.validate(self.init_data)
        self._request = RunRequest.from_document(self.init_data)
        self.update_status(progress=0, status_message=f"Prepared case {self._request.case_id}")

    def on_run(self, run_data: dict) -> None:
        """
        Runs the simulation for the (N, k) of the task and writes its report.

        Raises:
            RuntimeError: If the solver failed or the task was cancelled.
        """
        validators = AdaptorDataValidators.for_adaptor(SCHEMA_DIR)
        validators.run_data.validate(run_data)
        if self._request is None:
            raise RuntimeError("on_start has to run before on_run")

        request = self._request
        if run_data.get("Q") is not None:
            request = dataclasses.replace(request, quadrature_order=run_data["Q"])
        out_dir = resolve_out_dir(run_data.get("out"))
        os.makedirs(out_dir, exist_ok=True)

        n_cells, degree = run_data["N"], run_data["k"]
        self._cancel_requested = False
        self._total_steps = steps_estimate(request.run_config())
        self._steps_done = 0
        self._last_progress = -1
        self.update_status(progress=0, status_message=f"Running N={n_cells} k={degree}")
        try:
            result = run_single(request, n_cells, degree, out_dir, on_step=self._handle_step)
        except RunCancelledError:
            raise RuntimeError(f"Run N={n_cells} k={degree} was cancelled")

        self._write_report(request, result, out_dir)
        if not result.ok:
            raise RuntimeError(f"Run N={n_cells} k={degree} failed: {result.failure}")
        self.update_status(progress=100, status_message=f"Finished N={n_cells} k={degree}")

    def _handle_step(self, state: DGState) -> None:
        """Reports progress in whole percent and stops the time loop after a cancel request."""
        if self._cancel_requested:
            raise RunCancelledError()
        self._steps_done += 1
        progress = min(99, int(100 * self._steps_done / self._total_steps))
        if progress > self._last_progress:
            self._last_progress = progress
            self.update_status(progress=progress)

    def _write_report(self, request: RunRequest, result: RunResult, out_dir: str) -> None:
        name = f"runreport_{result.case_id}_N{result.n_cells}_k{result.degree}.json"
        write_json(
            {"config": request.to_document(), "run": result.to_dict()},
            os.path.join(out_dir, name),
        )

    def on_stop(self) -> None:
        return

    def on_cleanup(self):
        self._request = None

    def on_cancel(self):
        """
        Stops the running task at the next accepted time step.
        """
        _logger.info("CANCEL REQUESTED")
        self._cancel_requested = True
