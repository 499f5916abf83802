"""
Shared fixtures for command-line tests.
Keeps log files and run artifacts inside the test's tmp directory.
"""
import logging
import os
import sys

import pytest

sys.path.insert(
    0,
    os.path.abspath(
        os.path.join(
            os.path.dirname(__file__),
            '../..')))

from qnn_entanglement import settings  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    log_dir = tmp_path / "logs"
    monkeypatch.setattr(settings, "LOG_DIR", str(log_dir))
    yield log_dir
    for name in (None, "training_activity"):
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)


@pytest.fixture
def tiny_yaml(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(
        "grid:\n"
        "  dt: 0.8\n"
        "  n_steps: 16\n"
        "training:\n"
        "  learning_rate: 1.0e-5\n"
        "  max_epochs: 3\n"
        "  seed: 2\n",
        encoding="utf-8",
    )
    return str(path)
