import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from qnn_entanglement import settings
from qnn_entanglement.dao import artifact_dao
from qnn_entanglement.dao.fits_dao import FitsDAO
from qnn_entanglement.dao.matrix_dao import load_density_matrix
from qnn_entanglement.exceptions import (
    CommandError, EXIT_FAILURE, EXIT_INVALID, InvalidArgumentError, QNNError
)
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.noise_model import (
    BW_REFERENCE_AMPLITUDE, NOISE_AMPLITUDE_LADDER, NoiseDistribution,
    NoiseKind, NoiseSpec
)
from qnn_entanglement.models.quantum_state import PureState
from qnn_entanglement.models.schedule_model import (
    FUNCTION_NAMES, FourierFit, ParameterSchedule
)
from qnn_entanglement.models.training_model import (
    EntanglementReport, SweepResult
)
from qnn_entanglement.services.entanglement_service import (
    entanglement_of_formation, entanglement_report, make_m_state,
    make_p_state, noisy_eof_samples
)
from qnn_entanglement.services.fourier_service import (
    randomize_fit, sample_to_schedule
)
from qnn_entanglement.services.noise_service import (
    make_rng, mean_and_stderr, stream_rng
)
from qnn_entanglement.services.propagator import (
    build_hamiltonians, spectral_unitaries
)
from qnn_entanglement.services.trainer_service import evaluate_indicator

logger = logging.getLogger(__name__)

FAMILIES = ("P", "M")
DEFAULT_RANGES = {"P": (0.0, 4.0), "M": (0.0, 10.0)}
DEFAULT_N_POINTS = 31
DEFAULT_N_SEEDS = 32
DEFAULT_TRIALS = 50

# Stream keys keep the indicator and reference draws independent
INDICATOR_STREAM = 0
REFERENCE_STREAM = 1

RANDOMIZE_TARGETS = FUNCTION_NAMES + tuple(f"{name}-omega"
                                           for name in FUNCTION_NAMES)
RANDOMIZE_COLUMNS = ["which", "trial", "mean_abs_error", "max_abs_error",
                     "rms_error"]


class SweepRequest(BaseModel):
    family: str = Field(..., description="State family, P or M")
    start: Optional[float] = Field(None, description="First sweep value")
    stop: Optional[float] = Field(None, description="Last sweep value")
    n_points: int = Field(DEFAULT_N_POINTS, ge=1)
    n_seeds: int = Field(DEFAULT_N_SEEDS, ge=1,
                         description="Noise replicas per point")
    noise_kind: NoiseKind = Field(NoiseKind.MAGNITUDE)
    distribution: NoiseDistribution = Field(NoiseDistribution.GAUSSIAN)
    test_amplitudes: List[float] = Field(
        default_factory=lambda: list(NOISE_AMPLITUDE_LADDER))
    bw_amplitude: float = Field(BW_REFERENCE_AMPLITUDE, ge=0,
                                description="Noise level of the noisy E_F "
                                            "reference")
    phase: float = Field(0.0, description="arg(gamma) for the P family")
    seed: int = Field(0, ge=0)


def _state_battery():
    battery = [(f"P({g:g})", make_p_state(g)) for g in (0.0, 0.5, 1.0, 2.0,
                                                        4.0)]
    battery += [(f"M({d:g})", make_m_state(d)) for d in (0.0, 1.0, 5.0)]
    battery += [(name, PureState.named(name)) for name in ("flat", "c")]
    return battery


class SweepController:

    def __init__(self, workers: Optional[int] = None):
        self.workers = max(1, int(workers or settings.WORKERS))

    def _load_fits(self, fits_path: str, grid: Optional[TimeGrid]
                   ) -> Tuple[Dict[str, FourierFit], TimeGrid]:
        try:
            fits, stored_grid = FitsDAO(fits_path).load_fits()
        except (FileNotFoundError, InvalidArgumentError) as e:
            logger.error(f"Cannot use fits {fits_path}: {e}")
            raise CommandError(EXIT_INVALID, str(e))
        return fits, grid or stored_grid or TimeGrid()

    def _check_request(self, request: SweepRequest) -> SweepRequest:
        if request.family not in FAMILIES:
            raise CommandError(
                EXIT_INVALID,
                f"Unknown state family '{request.family}' "
                f"(expected one of {', '.join(FAMILIES)})"
            )
        low, high = DEFAULT_RANGES[request.family]
        start = low if request.start is None else request.start
        stop = high if request.stop is None else request.stop
        if not (np.isfinite(start) and np.isfinite(stop)) or start > stop:
            raise CommandError(EXIT_INVALID,
                               f"Sweep range [{start}, {stop}] is not "
                               "well ordered")
        if request.family == "M" and start < 0:
            raise CommandError(EXIT_INVALID, "delta must be >= 0")
        if any(a < 0 or not np.isfinite(a) for a in request.test_amplitudes):
            raise CommandError(EXIT_INVALID,
                               "Test amplitudes must be nonnegative")
        return request.model_copy(update={"start": start, "stop": stop})

    def _build_state(self, request: SweepRequest, value: float):
        if request.family == "P":
            return make_p_state(value * np.exp(1j * request.phase))
        return make_m_state(value)

    def _sweep_point(self, job) -> SweepResult:
        (request, schedule, unitaries, grid, amp_index, amplitude, index,
         value) = job
        state = self._build_state(request, value)
        eof_clean = entanglement_of_formation(state)

        if amplitude == 0.0:
            outputs = [evaluate_indicator(state, {}, grid, schedule=schedule)]
        else:
            noise = NoiseSpec(kind=request.noise_kind, amplitude=amplitude,
                              seed=request.seed,
                              distribution=request.distribution)
            outputs = [
                evaluate_indicator(
                    state, {}, grid, noise=noise, schedule=schedule,
                    rng=stream_rng(request.seed, INDICATOR_STREAM,
                                   amp_index, index, replica))
                for replica in range(request.n_seeds)
            ]
        qnn_mean, qnn_stderr = mean_and_stderr(outputs)

        reference = NoiseSpec(kind=request.noise_kind,
                              amplitude=request.bw_amplitude,
                              seed=request.seed,
                              distribution=request.distribution)
        rngs = [stream_rng(request.seed, REFERENCE_STREAM, index, replica)
                for replica in range(request.n_seeds)]
        noisy = noisy_eof_samples(state, reference, grid.n_steps, rngs,
                                  unitaries)
        eof_mean, eof_stderr = mean_and_stderr(noisy)

        return SweepResult(
            family=request.family, parameter=float(value),
            test_amplitude=amplitude,
            qnn_output=qnn_mean, qnn_stderr=qnn_stderr,
            eof_clean=eof_clean,
            eof_noisy_mean=min(1.0, max(0.0, eof_mean)),
            eof_noisy_stderr=eof_stderr,
            n_seeds=request.n_seeds,
        )

    def sweep_state(self, request: SweepRequest, fits_path: str,
                    out_csv: str, grid: Optional[TimeGrid] = None,
                    argv: Sequence[str] = ()) -> List[SweepResult]:
        started = time.perf_counter()
        request = self._check_request(request)
        fits, grid = self._load_fits(fits_path, grid)
        schedule: ParameterSchedule = sample_to_schedule(fits, grid)
        _, _, unitaries = spectral_unitaries(
            build_hamiltonians(schedule.values), grid.dt)
        values = np.linspace(request.start, request.stop, request.n_points)
        jobs = [(request, schedule, unitaries, grid, a_index,
                 float(amplitude), index, float(value))
                for a_index, amplitude in enumerate(request.test_amplitudes)
                for index, value in enumerate(values)]
        logger.info(
            f"Sweeping family {request.family} over {request.n_points} "
            f"points at test amplitudes {request.test_amplitudes}"
        )

        try:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(self._sweep_point, jobs))
        except InvalidArgumentError as e:
            raise CommandError(EXIT_INVALID, str(e))
        except QNNError as e:
            logger.error(f"Sweep failed: {e}")
            raise CommandError(EXIT_FAILURE, str(e))

        artifact_dao.save_sweep(results, out_csv)
        artifact_dao.save_manifest(
            artifact_dao.build_manifest(
                "sweep-state", argv, request.seed,
                time.perf_counter() - started,
                request=request.model_dump(mode="json"),
                fits=fits_path, grid=grid.model_dump()),
            artifact_dao.manifest_path_for(out_csv),
        )
        return results

    def _battery_outputs(self, fits, grid, battery) -> np.ndarray:
        schedule = sample_to_schedule(fits, grid)
        return np.array([evaluate_indicator(state, fits, grid,
                                            schedule=schedule)
                         for _, state in battery])

    def randomize_coefficient(self, fits_path: str, which: str, trials: int,
                              out_csv: str, seed: int = 0,
                              grid: Optional[TimeGrid] = None,
                              argv: Sequence[str] = ()) -> pd.DataFrame:
        started = time.perf_counter()
        if which not in RANDOMIZE_TARGETS:
            raise CommandError(
                EXIT_INVALID,
                f"Unknown coefficient target '{which}' (expected one of "
                f"{', '.join(RANDOMIZE_TARGETS)})"
            )
        if trials < 0:
            raise CommandError(EXIT_INVALID, "trials must be >= 0")
        fits, grid = self._load_fits(fits_path, grid)
        name, _, suffix = which.partition("-")
        battery = _state_battery()

        rows = []
        if trials > 0:
            baseline = self._battery_outputs(fits, grid, battery)
            rng = make_rng(seed)
            randomized = [dict(fits, **{name: randomize_fit(
                              fits[name], rng, frequency=bool(suffix))})
                          for _ in range(trials)]
            try:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    outputs = list(pool.map(
                        lambda f: self._battery_outputs(f, grid, battery),
                        randomized))
            except QNNError as e:
                raise CommandError(EXIT_FAILURE, str(e))
            for trial, out in enumerate(outputs):
                errors = np.abs(out - baseline)
                rows.append({
                    "which": which, "trial": trial,
                    "mean_abs_error": float(np.mean(errors)),
                    "max_abs_error": float(np.max(errors)),
                    "rms_error": float(np.sqrt(np.mean(errors ** 2))),
                })
            summary = pd.DataFrame(rows)
            logger.info(
                f"Randomized {which} over {trials} trials: mean error "
                f"{summary['mean_abs_error'].mean():.4f}, worst "
                f"{summary['max_abs_error'].max():.4f}"
            )

        df = pd.DataFrame(rows, columns=RANDOMIZE_COLUMNS)
        artifact_dao.write_table(df, out_csv)
        artifact_dao.save_manifest(
            artifact_dao.build_manifest(
                "randomize-coeff", argv, seed,
                time.perf_counter() - started,
                which=which, trials=trials, fits=fits_path,
                battery=[label for label, _ in battery]),
            artifact_dao.manifest_path_for(out_csv),
        )
        return df

    def eof(self, matrix_path: str) -> EntanglementReport:
        try:
            rho = load_density_matrix(matrix_path)
            return entanglement_report(rho)
        except FileNotFoundError as e:
            raise CommandError(EXIT_INVALID, str(e))
        except (ValueError, KeyError) as e:
            logger.error(f"Invalid matrix in {matrix_path}: {e}")
            raise CommandError(EXIT_INVALID, str(e))
        except QNNError as e:
            raise CommandError(EXIT_FAILURE, str(e))
