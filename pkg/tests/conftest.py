"""
Shared pytest fixtures and the gate for long reproduction runs.
"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(
    0,
    os.path.abspath(
        os.path.join(
            os.path.dirname(__file__),
            '..')))

from qnn_entanglement import settings  # noqa: E402
from qnn_entanglement.models.hamiltonian_model import TimeGrid  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: full-size reproduction, needs QNN_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if settings.RUN_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="set QNN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_grid():
    return TimeGrid(dt=0.8, n_steps=24)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

