import json

import pytest

from qnn_entanglement import settings
from qnn_entanglement.dao.fits_dao import FitsDAO
from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.schedule_model import FourierFit


@pytest.fixture
def fits():
    return {
        "K": FourierFit(a0=2e-3, a1=1e-3, b1=-5e-4, a2=3e-4, b2=2e-4,
                        omega=0.05, order=2, rms_residual=1e-6),
        "eps": FourierFit(a0=1e-4, a1=2e-5, b1=0.0, omega=0.02, order=1),
        "zeta": FourierFit(a0=8e-5, a1=3e-5, b1=1e-5, omega=0.03, order=1),
    }


class TestFitsDAO:

    def test_default_path_under_data_dir(self, tmp_path, monkeypatch, fits):
        monkeypatch.setattr(settings, "DATA_DIR", str(tmp_path / "data"))
        dao = FitsDAO()
        assert dao.json_path == str(tmp_path / "data" / "fits.json")
        dao.save_fits(fits)
        assert FitsDAO().load_fits()[0] == fits

    def test_save_and_load(self, tmp_path, fits):
        dao = FitsDAO(str(tmp_path / "fits.json"))
        dao.save_fits(fits, TimeGrid(dt=0.8, n_steps=100))
        loaded, grid = dao.load_fits()
        assert loaded == fits
        assert grid == TimeGrid(dt=0.8, n_steps=100)

    def test_grid_is_optional(self, tmp_path, fits):
        dao = FitsDAO(str(tmp_path / "fits.json"))
        dao.save_fits(fits)
        _, grid = dao.load_fits()
        assert grid is None

    def test_file_layout(self, tmp_path, fits):
        dao = FitsDAO(str(tmp_path / "fits.json"))
        dao.save_fits(fits)
        with open(dao.json_path, encoding="utf-8") as f:
            payload = json.load(f)
        assert set(payload) == {"K", "eps", "zeta"}
        assert payload["K"]["omega"] == 0.05

    def test_missing_function(self, tmp_path, fits):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"K": fits["K"].model_dump()}),
                        encoding="utf-8")
        with pytest.raises(InvalidArgumentError, match="missing"):
            FitsDAO(str(path)).load_fits()

    def test_invalid_fit(self, tmp_path, fits):
        payload = {name: fit.model_dump() for name, fit in fits.items()}
        payload["zeta"]["omega"] = -1.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(InvalidArgumentError, match="Invalid fits"):
            FitsDAO(str(path)).load_fits()

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(InvalidArgumentError, match="Malformed"):
            FitsDAO(str(path)).load_fits()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            FitsDAO(str(tmp_path / "none.json")).load_fits()
