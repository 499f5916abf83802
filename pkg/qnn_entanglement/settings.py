import logging
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

LOG_DIR = os.getenv("QNN_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("QNN_LOG_LEVEL", "INFO")
DATA_DIR = os.getenv("QNN_DATA_DIR", "data")


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}")
        return default


WORKERS = _int_from_env("QNN_WORKERS", 4)
RUN_SLOW = os.getenv("QNN_RUN_SLOW", "0") == "1"
