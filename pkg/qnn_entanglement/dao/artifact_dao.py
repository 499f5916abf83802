"""Result tables and run manifests.

Every CSV written here gets a ``<name>.manifest.json`` sidecar describing
the command that produced it.
"""
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Sequence

import numpy as np
import pandas as pd

from qnn_entanglement import __version__
from qnn_entanglement.dao import FLOAT_FORMAT
from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.training_model import SweepResult

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['family', 'parameter', 'test_amplitude', 'qnn_output',
                 'qnn_stderr', 'eof_clean', 'eof_noisy_mean',
                 'eof_noisy_stderr', 'n_seeds']
MANIFEST_SUFFIX = '.manifest.json'


def manifest_path_for(output_path: str) -> str:
    """results/sweep.csv -> results/sweep.manifest.json"""
    path = Path(output_path)
    return str(path.with_name(path.stem + MANIFEST_SUFFIX))


def write_table(df: pd.DataFrame, csv_path: str) -> None:
    """Write a result table; refuses NaN or infinite values."""
    numeric = df.select_dtypes(include=[np.number])
    if not np.all(np.isfinite(numeric.to_numpy(dtype=float))):
        logger.error(f"Refusing to write non-finite values to {csv_path}")
        raise InvalidArgumentError(
            f"Table for {csv_path} contains NaN or infinite values")
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(df)} rows to {csv_path}")


def save_sweep(results: Sequence[SweepResult], csv_path: str) -> None:
    df = pd.DataFrame([r.model_dump() for r in results],
                      columns=SWEEP_COLUMNS)
    df = df.sort_values(['test_amplitude', 'parameter'], kind='stable')
    write_table(df, csv_path)


def build_manifest(command: str, argv: Sequence[str], seed: int,
                   wall_time_s: float, **fields: Any) -> Dict[str, Any]:
    manifest = {
        'command': command,
        'argv': list(argv),
        'seed': int(seed),
        'version': __version__,
        'created_at': datetime.now().isoformat(timespec='seconds'),
        'wall_time_s': round(float(wall_time_s), 3),
    }
    manifest.update(fields)
    return manifest


def save_manifest(manifest: Dict[str, Any], path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Saved run manifest to {path}")


def load_manifest(path: str) -> Dict[str, Any]:
    if not Path(path).exists():
        logger.error(f"Manifest not found at: {path}")
        raise FileNotFoundError(f"Manifest not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"Malformed manifest {path}: {e}")
    for key in ('command', 'argv'):
        if key not in manifest:
            raise InvalidArgumentError(f"Manifest {path} lacks '{key}'")
    return manifest
