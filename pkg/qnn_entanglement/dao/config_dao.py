"""YAML run configuration.

The file has the sections ``grid``, ``training``, ``init``, ``noise`` and
``fourier``. The ``training`` keys are flattened onto ``TrainingConfig``.
"""
import logging
from pathlib import Path
from typing import Any, Dict

import yaml
from pydantic import ValidationError

from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.training_model import TrainingConfig

logger = logging.getLogger(__name__)

TRAINING_SECTION = 'training'
TRAINING_KEYS = ('learning_rate', 'max_epochs', 'stop_rms', 'seed',
                 'tie_K', 'tie_eps')


def config_from_dict(data: Dict[str, Any]) -> TrainingConfig:
    if not isinstance(data, dict):
        raise InvalidArgumentError("Config must be a mapping at the top level")
    flat = dict(data)
    training = flat.pop(TRAINING_SECTION, None) or {}
    if not isinstance(training, dict):
        raise InvalidArgumentError("'training' section must be a mapping")
    clash = sorted(set(training) & set(flat))
    if clash:
        raise InvalidArgumentError(
            f"Keys given both inside and outside 'training': {clash}")
    flat.update(training)
    try:
        return TrainingConfig.model_validate(flat)
    except ValidationError as e:
        raise InvalidArgumentError(f"Invalid config: {e}")


def config_to_dict(config: TrainingConfig) -> Dict[str, Any]:
    flat = config.model_dump(mode="json")
    nested = {'grid': flat.pop('grid')}
    nested[TRAINING_SECTION] = {key: flat.pop(key) for key in TRAINING_KEYS}
    nested.update(flat)
    return nested


def load_config(path: str) -> TrainingConfig:
    config_file = Path(path)
    if not config_file.exists():
        logger.error(f"Config file not found at: {path}")
        raise FileNotFoundError(f"Config file not found: {path}")

    try:
        with open(config_file, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        logger.error(f"Error parsing YAML config {path}: {e}")
        raise InvalidArgumentError(f"Malformed YAML in {path}: {e}")

    try:
        config = config_from_dict(data)
    except InvalidArgumentError as e:
        logger.error(f"Rejected config {path}: {e}")
        raise

    logger.info(f"Loaded training config from {path}")
    return config


def save_config(config: TrainingConfig, path: str) -> None:
    config_file = Path(path)
    config_file.parent.mkdir(parents=True, exist_ok=True)
    with open(config_file, 'w', encoding='utf-8') as f:
        yaml.safe_dump(config_to_dict(config), f, sort_keys=False)
    logger.info(f"Saved training config to {path}")
