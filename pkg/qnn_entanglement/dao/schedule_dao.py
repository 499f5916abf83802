import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from qnn_entanglement import settings
from qnn_entanglement.dao import FLOAT_FORMAT
from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import (
    PARAMETER_NAMES, TimeGrid
)
from qnn_entanglement.models.schedule_model import (
    EPS_A, EPS_B, K_A, K_B, ParameterSchedule
)

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ['step', 't_mid'] + list(PARAMETER_NAMES)


class ScheduleDAO:

    def __init__(self, csv_path: Optional[str] = None):
        self.csv_path = csv_path or str(Path(settings.DATA_DIR) /
                                        "schedule.csv")

    def save_schedule(self, schedule: ParameterSchedule,
                      grid: TimeGrid) -> None:
        if schedule.n_steps != grid.n_steps:
            raise InvalidArgumentError(
                "Schedule length does not match the grid")
        df = pd.DataFrame(schedule.values, columns=list(PARAMETER_NAMES))
        df.insert(0, 't_mid', grid.midpoints())
        df.insert(0, 'step', np.arange(grid.n_steps))

        Path(self.csv_path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(self.csv_path, index=False, float_format=FLOAT_FORMAT)
        logger.info(
            f"Saved {schedule.n_steps}-step schedule to {self.csv_path}")

    def load_schedule(self) -> ParameterSchedule:
        if not Path(self.csv_path).exists():
            logger.warning(f"Schedule CSV not found at: {self.csv_path}")
            raise FileNotFoundError(
                f"Schedule CSV not found: {self.csv_path}")

        df = pd.read_csv(self.csv_path, float_precision='round_trip')
        missing = [c for c in SCHEDULE_COLUMNS if c not in df.columns]
        if missing:
            raise InvalidArgumentError(
                f"Schedule CSV {self.csv_path} lacks columns: {missing}")
        df = df.sort_values('step')
        values = df[list(PARAMETER_NAMES)].to_numpy(dtype=float)
        # Tie flags are recovered from exact column equality
        tie_K = bool(np.array_equal(values[:, K_A], values[:, K_B]))
        tie_eps = bool(np.array_equal(values[:, EPS_A], values[:, EPS_B]))
        logger.info(f"Loaded {len(df)}-step schedule from {self.csv_path}")
        return ParameterSchedule(values, tie_K=tie_K, tie_eps=tie_eps)

    def load_grid(self) -> TimeGrid:
        """Infer the grid from the t_mid column of a saved schedule."""
        df = pd.read_csv(self.csv_path, float_precision='round_trip')
        t_mid = df['t_mid'].to_numpy(dtype=float)
        dt = 2.0 * float(t_mid[0])
        return TimeGrid(dt=dt, n_steps=len(t_mid))
