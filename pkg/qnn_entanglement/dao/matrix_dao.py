import json
import logging
from pathlib import Path

from qnn_entanglement.models.quantum_state import DensityMatrix, PureState

logger = logging.getLogger(__name__)


def load_density_matrix(path: str) -> DensityMatrix:
    """Read a matrix (or a pure state) and check its invariants."""
    matrix_file = Path(path)
    if not matrix_file.exists():
        raise FileNotFoundError(f"Matrix file not found: {path}")
    with open(matrix_file, 'r', encoding='utf-8') as f:
        payload = json.load(f)

    if isinstance(payload, list):
        payload = {'elements': payload}
    if 'amplitudes' in payload:
        rho = PureState.from_dict(payload).to_density_matrix()
    else:
        rho = DensityMatrix.from_dict(payload)
    logger.info(f"Loaded density matrix from {path}")
    return rho
