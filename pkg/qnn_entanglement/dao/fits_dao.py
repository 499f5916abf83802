import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

from pydantic import ValidationError

from qnn_entanglement import settings
from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.schedule_model import FUNCTION_NAMES, FourierFit

logger = logging.getLogger(__name__)


class FitsDAO:
    """Fourier fits per parameter function, stored as one JSON object."""

    def __init__(self, json_path: Optional[str] = None):
        self.json_path = json_path or str(Path(settings.DATA_DIR) /
                                          "fits.json")

    def save_fits(self, fits: Dict[str, FourierFit],
                  grid: Optional[TimeGrid] = None) -> None:
        payload = {name: fits[name].model_dump() for name in FUNCTION_NAMES}
        if grid is not None:
            payload['grid'] = grid.model_dump()

        path = Path(self.json_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Saved Fourier fits to {self.json_path}")

    def load_fits(self) -> Tuple[Dict[str, FourierFit], Optional[TimeGrid]]:
        path = Path(self.json_path)
        if not path.exists():
            logger.error(f"Fits file not found at: {self.json_path}")
            raise FileNotFoundError(f"Fits file not found: {self.json_path}")

        with open(path, 'r', encoding='utf-8') as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as e:
                raise InvalidArgumentError(
                    f"Malformed fits JSON {self.json_path}: {e}")

        try:
            fits = {name: FourierFit.model_validate(payload[name])
                    for name in FUNCTION_NAMES}
            grid = (TimeGrid.model_validate(payload['grid'])
                    if 'grid' in payload else None)
        except KeyError as e:
            raise InvalidArgumentError(
                f"Fits file {self.json_path} is missing {e}")
        except ValidationError as e:
            raise InvalidArgumentError(
                f"Invalid fits in {self.json_path}: {e}")

        logger.info(f"Loaded Fourier fits from {self.json_path}")
        return fits, grid
