import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from qnn_entanglement import settings
from qnn_entanglement.dao import artifact_dao
from qnn_entanglement.dao.config_dao import config_to_dict
from qnn_entanglement.dao.fits_dao import FitsDAO
from qnn_entanglement.dao.history_dao import HistoryCSVWriter
from qnn_entanglement.dao.schedule_dao import ScheduleDAO
from qnn_entanglement.exceptions import (
    CommandError, EXIT_DIVERGED, EXIT_FAILURE, EXIT_INVALID,
    InvalidArgumentError, QNNError, TrainingDivergedError
)
from qnn_entanglement.models.noise_model import NoiseKind, NoiseSpec
from qnn_entanglement.models.schedule_model import FUNCTION_NAMES, FourierFit
from qnn_entanglement.models.training_model import (
    FourierOrders, TrainingConfig
)
from qnn_entanglement.services.fourier_service import fit_schedule
from qnn_entanglement.services.trainer_service import (
    TrainingActivityLogger, default_training_set, select_learning_rate, train
)

logger = logging.getLogger(__name__)

HISTORY_FILE = "history.csv"
SCHEDULE_FILE = "schedule.csv"
FITS_FILE = "fits.json"
MANIFEST_FILE = "train.manifest.json"

FOURIER_COEFFICIENTS = ("a0", "a1", "b1", "a2", "b2", "omega",
                        "rms_residual")
FOURIER_TABLE_COLUMNS = ["kind", "amplitude", "replica", "parameter",
                         "coefficient", "value", "train_rms"]


class TrainRunSummary(BaseModel):
    out_dir: str = Field(..., description="Directory holding the artifacts")
    epochs: int = Field(..., ge=1, description="Epochs recorded")
    final_rms: float = Field(..., ge=0, description="RMS error of the "
                                                    "returned schedule")
    learning_rate: float = Field(..., gt=0)
    per_sample_outputs: Dict[str, float] = Field(...)
    fits: Dict[str, FourierFit] = Field(...)


class TrainingController:

    def __init__(self, workers: Optional[int] = None):
        self.workers = max(1, int(workers or settings.WORKERS))
        logger.info(f"TrainingController initialized with "
                    f"{self.workers} workers")

    def _resolve_learning_rate(self, samples, config: TrainingConfig
                               ) -> TrainingConfig:
        if config.learning_rate != "auto":
            return config
        try:
            rate = select_learning_rate(samples, config, workers=self.workers)
        except TrainingDivergedError as e:
            raise CommandError(EXIT_DIVERGED, str(e))
        return config.model_copy(update={"learning_rate": rate})

    def train(self, config: TrainingConfig, out_dir: str,
              argv: Sequence[str] = ()) -> TrainRunSummary:
        started = time.perf_counter()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        samples = default_training_set()
        names = [s.name for s in samples]
        config = self._resolve_learning_rate(samples, config)

        history_writer = HistoryCSVWriter(str(out / HISTORY_FILE), names)
        observers = [history_writer, TrainingActivityLogger()]

        def manifest(status: str, **fields):
            artifact_dao.save_manifest(
                artifact_dao.build_manifest(
                    "train", argv, config.seed,
                    time.perf_counter() - started,
                    status=status,
                    config=config_to_dict(config),
                    noise=(config.noise.model_dump(mode="json")
                           if config.noise else None),
                    **fields),
                str(out / MANIFEST_FILE),
            )

        try:
            schedule, history = train(samples, config, observers=observers,
                                      workers=self.workers)
        except TrainingDivergedError as e:
            logger.error(f"Training diverged: {e}")
            manifest("diverged", epochs=len(e.history))
            raise CommandError(EXIT_DIVERGED, str(e))
        except InvalidArgumentError as e:
            logger.error(f"Invalid training input: {e}")
            raise CommandError(EXIT_INVALID, str(e))
        except QNNError as e:
            logger.error(f"Training failed: {e}")
            raise CommandError(EXIT_FAILURE, str(e))

        ScheduleDAO(str(out / SCHEDULE_FILE)).save_schedule(schedule,
                                                            config.grid)
        try:
            fits = fit_schedule(schedule, config.grid, config.fourier)
        except QNNError as e:
            logger.error(f"Fourier fit of the trained schedule failed: {e}")
            raise CommandError(EXIT_FAILURE, str(e))
        FitsDAO(str(out / FITS_FILE)).save_fits(fits, config.grid)

        final = history[-1]
        manifest("ok", epochs=len(history), final_rms=final.rms_error)
        logger.info(f"Training artifacts written to {out}")
        return TrainRunSummary(
            out_dir=str(out),
            epochs=len(history),
            final_rms=final.rms_error,
            learning_rate=config.learning_rate,
            per_sample_outputs=dict(zip(names, final.per_sample_outputs)),
            fits=fits,
        )

    def fit(self, schedule_csv: str, out_json: str,
            orders: Optional[FourierOrders] = None,
            argv: Sequence[str] = ()) -> Dict[str, FourierFit]:
        started = time.perf_counter()
        dao = ScheduleDAO(schedule_csv)
        try:
            schedule = dao.load_schedule()
            grid = dao.load_grid()
            fits = fit_schedule(schedule, grid, orders or FourierOrders())
        except (FileNotFoundError, InvalidArgumentError) as e:
            raise CommandError(EXIT_INVALID, str(e))
        except QNNError as e:
            raise CommandError(EXIT_FAILURE, str(e))

        FitsDAO(out_json).save_fits(fits, grid)
        artifact_dao.save_manifest(
            artifact_dao.build_manifest(
                "fit", argv, 0, time.perf_counter() - started,
                schedule=schedule_csv,
                orders=(orders or FourierOrders()).model_dump()),
            artifact_dao.manifest_path_for(out_json),
        )
        return fits

    def _noise_run(self, job) -> List[dict]:
        config, kind, amplitude, replica = job
        base = config.noise or NoiseSpec(kind=kind, amplitude=0.0,
                                         seed=config.seed)
        noise = base.model_copy(update={
            "kind": kind, "amplitude": amplitude, "seed": base.seed + replica,
        })
        run_config = config.model_copy(update={
            "seed": config.seed + replica, "noise": noise,
        })
        schedule, history = train(default_training_set(), run_config)
        fits = fit_schedule(schedule, run_config.grid, run_config.fourier)
        logger.info(f"{kind.value} noise {amplitude:g} replica {replica}: "
                    f"rms={history[-1].rms_error:.3e}")
        return [
            {"kind": kind.value, "amplitude": amplitude, "replica": replica,
             "parameter": name, "coefficient": coefficient,
             "value": getattr(fits[name], coefficient),
             "train_rms": history[-1].rms_error}
            for name in FUNCTION_NAMES
            for coefficient in FOURIER_COEFFICIENTS
        ]

    def fourier_vs_noise(self, config: TrainingConfig, kind: str,
                         amplitudes: Sequence[float], seeds_per_point: int,
                         out_csv: str, argv: Sequence[str] = ()
                         ) -> pd.DataFrame:
        started = time.perf_counter()
        try:
            kind = NoiseKind(kind)
        except ValueError:
            raise CommandError(EXIT_INVALID, f"Unknown noise kind '{kind}'")
        if any(a < 0 for a in amplitudes):
            raise CommandError(EXIT_INVALID,
                               "Noise amplitudes must be nonnegative")
        if seeds_per_point < 1:
            raise CommandError(EXIT_INVALID, "seeds-per-point must be >= 1")
        if config.learning_rate == "auto":
            config = self._resolve_learning_rate(default_training_set(),
                                                 config)

        jobs = [(config, kind, float(a), r)
                for a in amplitudes for r in range(seeds_per_point)]
        logger.info(f"Training {len(jobs)} runs for {kind.value} noise "
                    f"at amplitudes {list(amplitudes)}")
        try:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                batches = list(pool.map(self._noise_run, jobs))
        except TrainingDivergedError as e:
            raise CommandError(EXIT_DIVERGED, str(e))
        except QNNError as e:
            raise CommandError(EXIT_FAILURE, str(e))

        rows = [row for batch in batches for row in batch]
        df = pd.DataFrame(rows, columns=FOURIER_TABLE_COLUMNS)
        artifact_dao.write_table(df, out_csv)
        artifact_dao.save_manifest(
            artifact_dao.build_manifest(
                "fourier-vs-noise", argv, config.seed,
                time.perf_counter() - started,
                kind=kind.value, amplitudes=[float(a) for a in amplitudes],
                seeds_per_point=seeds_per_point,
                config=config_to_dict(config)),
            artifact_dao.manifest_path_for(out_csv),
        )
        return df
