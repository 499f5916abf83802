import csv
import logging
from pathlib import Path
from typing import List, Sequence

from qnn_entanglement.dao import FLOAT_FORMAT
from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.interfaces.observer_interface import TrainingObserver
from qnn_entanglement.models.training_model import EpochRecord

logger = logging.getLogger(__name__)


def history_columns(sample_names: Sequence[str]) -> List[str]:
    return ['epoch', 'rms'] + [f"out_{name}" for name in sample_names]


def _row(record: EpochRecord) -> list:
    values = [record.rms_error] + list(record.per_sample_outputs)
    return [record.epoch] + [FLOAT_FORMAT % v for v in values]


class HistoryCSVWriter(TrainingObserver):
    """Streams one CSV row per epoch while training runs."""

    def __init__(self, csv_path: str, sample_names: Sequence[str]):
        self.csv_path = csv_path
        self.columns = history_columns(sample_names)
        self.rows_written = 0
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, 'w', encoding='utf-8', newline='') as f:
            csv.writer(f).writerow(self.columns)
        logger.info(f"Streaming training history to {csv_path}")

    def update(self, record, event_type, event_data):
        if event_type != "epoch":
            return
        if len(record.per_sample_outputs) != len(self.columns) - 2:
            raise InvalidArgumentError(
                "Epoch record does not match the history columns")
        with open(self.csv_path, 'a', encoding='utf-8', newline='') as f:
            csv.writer(f).writerow(_row(record))
        self.rows_written += 1
