import json

import numpy as np
import pandas as pd
import pytest

from qnn_entanglement.controllers.training_controller import (
    FITS_FILE, FOURIER_TABLE_COLUMNS, HISTORY_FILE, MANIFEST_FILE,
    SCHEDULE_FILE, TrainingController
)
from qnn_entanglement.dao.schedule_dao import ScheduleDAO
from qnn_entanglement.exceptions import (
    CommandError, EXIT_DIVERGED, EXIT_INVALID
)
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.training_model import (
    FourierOrders, TrainingConfig
)
from qnn_entanglement.services import trainer_service


@pytest.fixture
def tiny_config():
    return TrainingConfig(grid=TimeGrid(dt=0.8, n_steps=16), max_epochs=3,
                          learning_rate=1e-5, seed=5)


@pytest.fixture
def controller():
    return TrainingController(workers=2)


class TestTrain:

    def test_writes_artifacts(self, tmp_path, tiny_config, controller):
        summary = controller.train(tiny_config, str(tmp_path),
                                   argv=["train", "--config", "x.yaml"])
        for name in (HISTORY_FILE, SCHEDULE_FILE, FITS_FILE, MANIFEST_FILE):
            assert (tmp_path / name).exists()

        history = pd.read_csv(tmp_path / HISTORY_FILE)
        assert len(history) == summary.epochs == 3
        assert list(history.columns) == [
            "epoch", "rms", "out_bell", "out_flat", "out_c", "out_p"]
        assert history["rms"].iloc[-1] == pytest.approx(summary.final_rms)
        assert set(summary.fits) == {"K", "eps", "zeta"}

    def test_manifest_echoes_config(self, tmp_path, tiny_config, controller):
        controller.train(tiny_config, str(tmp_path), argv=["train"])
        manifest = json.loads((tmp_path / MANIFEST_FILE).read_text())
        assert manifest["command"] == "train"
        assert manifest["status"] == "ok"
        assert manifest["seed"] == 5
        assert manifest["config"]["grid"] == {"dt": 0.8, "n_steps": 16}
        assert manifest["config"]["training"]["max_epochs"] == 3

    def test_schedule_matches_grid(self, tmp_path, tiny_config, controller):
        controller.train(tiny_config, str(tmp_path))
        dao = ScheduleDAO(str(tmp_path / SCHEDULE_FILE))
        assert dao.load_grid() == tiny_config.grid
        assert dao.load_schedule().n_steps == 16

    def test_same_seed_same_schedule(self, tmp_path, tiny_config,
                                     controller):
        controller.train(tiny_config, str(tmp_path / "a"))
        controller.train(tiny_config, str(tmp_path / "b"))
        assert (tmp_path / "a" / SCHEDULE_FILE).read_bytes() == \
            (tmp_path / "b" / SCHEDULE_FILE).read_bytes()

    def test_divergence_exit_code(self, tmp_path, tiny_config, controller,
                                  monkeypatch):
        def broken(sample, schedule, grid, trajectory=None):
            return np.full((grid.n_steps, 5), np.inf)

        monkeypatch.setattr(trainer_service, "adjoint_gradient", broken)
        with pytest.raises(CommandError) as excinfo:
            controller.train(tiny_config, str(tmp_path))
        assert excinfo.value.exit_code == EXIT_DIVERGED
        manifest = json.loads((tmp_path / MANIFEST_FILE).read_text())
        assert manifest["status"] == "diverged"
        assert not (tmp_path / SCHEDULE_FILE).exists()


class TestFit:

    def test_fit_from_training_output(self, tmp_path, tiny_config,
                                      controller):
        controller.train(tiny_config, str(tmp_path))
        out = tmp_path / "refit.json"
        fits = controller.fit(str(tmp_path / SCHEDULE_FILE), str(out),
                              FourierOrders(K=1))
        assert fits["K"].order == 1
        assert out.exists()
        assert (tmp_path / "refit.manifest.json").exists()

    def test_missing_schedule(self, tmp_path, controller):
        with pytest.raises(CommandError) as excinfo:
            controller.fit(str(tmp_path / "none.csv"),
                           str(tmp_path / "fits.json"))
        assert excinfo.value.exit_code == EXIT_INVALID


class TestFourierVsNoise:

    def test_table_layout(self, tmp_path, tiny_config, controller):
        out = tmp_path / "fourier.csv"
        df = controller.fourier_vs_noise(tiny_config, "magnitude", [0.0],
                                         1, str(out))
        assert list(df.columns) == FOURIER_TABLE_COLUMNS
        # three functions, seven coefficients each
        assert len(df) == 21
        assert set(df["kind"]) == {"magnitude"}
        manifest = json.loads((tmp_path / "fourier.manifest.json")
                              .read_text())
        assert manifest["kind"] == "magnitude"

    @pytest.mark.parametrize("kind, amplitudes, seeds", [
        ("thermal", [0.01], 1),
        ("phase", [-0.01], 1),
        ("phase", [0.01], 0),
    ])
    def test_invalid_requests(self, tmp_path, tiny_config, controller,
                              kind, amplitudes, seeds):
        with pytest.raises(CommandError) as excinfo:
            controller.fourier_vs_noise(tiny_config, kind, amplitudes,
                                        seeds, str(tmp_path / "f.csv"))
        assert excinfo.value.exit_code == EXIT_INVALID
