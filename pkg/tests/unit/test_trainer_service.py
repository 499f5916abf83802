import numpy as np
import pytest

from qnn_entanglement.exceptions import InvalidArgumentError, \
    TrainingDivergedError
from qnn_entanglement.interfaces.observer_interface import TrainingObserver
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.noise_model import NoiseSpec
from qnn_entanglement.models.quantum_state import PureState
from qnn_entanglement.models.schedule_model import (
    EPS_A, EPS_B, K_A, K_B, ParameterSchedule
)
from qnn_entanglement.models.training_model import (
    TrainingConfig, TrainingSample
)
from qnn_entanglement.services import trainer_service
from qnn_entanglement.services.fourier_service import fit_schedule
from qnn_entanglement.services.noise_service import make_rng
from qnn_entanglement.services.trainer_service import (
    Trainer, adjoint_gradient, default_training_set, evaluate_indicator,
    fd_gradient, forward, initial_schedule, select_learning_rate, train
)
from tests.helpers import random_pure_amplitudes, random_schedule


@pytest.fixture
def tiny_config():
    return TrainingConfig(grid=TimeGrid(dt=0.8, n_steps=16), max_epochs=5,
                          learning_rate=1e-5, seed=3)


class RecordingObserver(TrainingObserver):

    def __init__(self):
        self.events = []

    def update(self, record, event_type, event_data):
        self.events.append((event_type, record))


class TestTrainingSet:

    def test_targets(self):
        samples = default_training_set()
        assert [s.name for s in samples] == ["bell", "flat", "c", "p"]
        assert [s.target for s in samples] == [1.0, 0.0, 0.0, 0.44]


class TestForward:

    def test_zero_schedule_bell(self, small_grid):
        sample = default_training_set()[0]
        output, trajectory = forward(
            sample, ParameterSchedule.zeros(small_grid.n_steps), small_grid)
        assert output == pytest.approx(1.0)
        assert len(trajectory) == small_grid.n_steps + 1

    def test_length_mismatch(self, small_grid):
        with pytest.raises(InvalidArgumentError):
            forward(default_training_set()[0], ParameterSchedule.zeros(3),
                    small_grid)


class TestAdjointGradient:

    def test_matches_finite_differences_untied(self, rng, small_grid):
        for _ in range(3):
            state = PureState(random_pure_amplitudes(rng))
            sample = TrainingSample(state, rng.uniform(0, 1))
            schedule = random_schedule(rng, small_grid.n_steps, scale=0.1,
                                       tie_K=False, tie_eps=False)
            adjoint = adjoint_gradient(sample, schedule, small_grid)
            numeric = fd_gradient(sample, schedule, small_grid)
            np.testing.assert_allclose(adjoint, numeric, rtol=1e-5,
                                       atol=1e-8)

    def test_matches_finite_differences_on_full_grid(self, rng):
        grid = TimeGrid()
        steps = [0, 1, 158, 315, 316]
        for _ in range(20):
            state = PureState(random_pure_amplitudes(rng))
            sample = TrainingSample(state, rng.uniform(0, 1))
            schedule = random_schedule(rng, grid.n_steps, scale=0.01)
            adjoint = adjoint_gradient(sample, schedule, grid)
            numeric = fd_gradient(sample, schedule, grid, steps=steps)
            np.testing.assert_allclose(adjoint[steps], numeric[steps],
                                       rtol=1e-5, atol=1e-8)

    def test_tied_columns_share_gradient(self, rng, small_grid):
        sample = default_training_set()[3]
        schedule = random_schedule(rng, small_grid.n_steps)
        gradient = adjoint_gradient(sample, schedule, small_grid)
        np.testing.assert_array_equal(gradient[:, K_A], gradient[:, K_B])
        np.testing.assert_array_equal(gradient[:, EPS_A], gradient[:, EPS_B])
        assert np.any(gradient != 0)

    def test_zero_at_target(self, small_grid):
        sample = TrainingSample(PureState.named("bell"), 1.0)
        gradient = adjoint_gradient(
            sample, ParameterSchedule.zeros(small_grid.n_steps), small_grid)
        np.testing.assert_allclose(gradient, 0.0, atol=1e-15)

    def test_trajectory_length_checked(self, rng, small_grid):
        sample = default_training_set()[0]
        other = TimeGrid(dt=0.8, n_steps=small_grid.n_steps - 4)
        _, trajectory = forward(sample, ParameterSchedule.zeros(
            other.n_steps), other)
        schedule = random_schedule(rng, small_grid.n_steps)
        with pytest.raises(InvalidArgumentError, match="Trajectory"):
            adjoint_gradient(sample, schedule, small_grid,
                             trajectory=trajectory)

    def test_fd_step_must_be_positive(self, small_grid):
        with pytest.raises(InvalidArgumentError):
            fd_gradient(default_training_set()[0],
                        ParameterSchedule.zeros(small_grid.n_steps),
                        small_grid, h=0.0)


class TestInitialSchedule:

    def test_jitter_bounds(self):
        config = TrainingConfig(grid=TimeGrid(dt=0.8, n_steps=50))
        schedule = initial_schedule(config, make_rng(0))
        k = schedule.values[:, K_A]
        assert np.all(np.abs(k / 2.5e-3 - 1) <= 0.1)
        np.testing.assert_array_equal(k, schedule.values[:, K_B])


class TestTrainer:

    def test_loss_decreases(self, tiny_config):
        _, history = train(default_training_set(), tiny_config)
        assert len(history) == 5
        rms = [r.rms_error for r in history]
        assert all(b <= a for a, b in zip(rms, rms[1:]))
        assert rms[-1] < rms[0]

    def test_deterministic_and_worker_independent(self, tiny_config):
        first, h1 = train(default_training_set(), tiny_config)
        second, h2 = train(default_training_set(), tiny_config, workers=3)
        np.testing.assert_array_equal(first.values, second.values)
        assert [r.rms_error for r in h1] == [r.rms_error for r in h2]

    def test_noisy_training_is_deterministic(self, tiny_config):
        config = tiny_config.model_copy(update={
            "noise": NoiseSpec(kind="complex", amplitude=0.014, seed=2)})
        first, _ = train(default_training_set(), config)
        second, _ = train(default_training_set(), config, workers=2)
        np.testing.assert_array_equal(first.values, second.values)

    def test_observers_notified(self, tiny_config):
        observer = RecordingObserver()
        train(default_training_set(), tiny_config, observers=[observer])
        kinds = [kind for kind, _ in observer.events]
        assert kinds.count("epoch") == 5
        assert kinds[-1] == "finished"

    def test_stops_at_stop_rms(self, tiny_config):
        config = tiny_config.model_copy(update={"stop_rms": 1.0})
        _, history = train(default_training_set(), config)
        assert len(history) == 1

    def test_rejects_empty_training_set(self, tiny_config):
        with pytest.raises(InvalidArgumentError):
            Trainer([], tiny_config)

    def test_non_finite_gradient_diverges(self, tiny_config, monkeypatch):
        def broken(sample, schedule, grid, trajectory=None):
            return np.full((grid.n_steps, 5), np.nan)

        monkeypatch.setattr(trainer_service, "adjoint_gradient", broken)
        with pytest.raises(TrainingDivergedError) as excinfo:
            train(default_training_set(), tiny_config)
        assert excinfo.value.history == []

    def test_growing_error_diverges(self, tiny_config, monkeypatch):
        calls = {"n": 0}

        def fake_forward(sample, schedule, grid, noise=None, rng=None):
            calls["n"] += 1
            return (0.01 if calls["n"] == 1 else 0.5), None

        def zero_gradient(sample, schedule, grid, trajectory=None):
            return np.zeros((grid.n_steps, 5))

        monkeypatch.setattr(trainer_service, "forward", fake_forward)
        monkeypatch.setattr(trainer_service, "adjoint_gradient",
                            zero_gradient)
        config = tiny_config.model_copy(update={"max_epochs": 50})
        samples = [TrainingSample(PureState.named("flat"), 0.0, name="flat")]
        with pytest.raises(TrainingDivergedError) as excinfo:
            train(samples, config)
        assert len(excinfo.value.history) == 11


class TestLearningRate:

    def test_select_from_candidates(self, tiny_config):
        rate = select_learning_rate(default_training_set(), tiny_config,
                                    candidates=(1e-5, 3e-5), trial_epochs=3)
        assert rate in (1e-5, 3e-5)

    def test_trainer_requires_resolved_rate(self, tiny_config):
        config = tiny_config.model_copy(update={"learning_rate": "auto"})
        with pytest.raises(InvalidArgumentError):
            Trainer(default_training_set(), config)

    def test_train_resolves_auto_rate(self, tiny_config):
        config = tiny_config.model_copy(update={"learning_rate": "auto",
                                               "max_epochs": 2})
        _, history = train(default_training_set(), config)
        assert len(history) == 2


class TestEvaluateIndicator:

    def test_matches_forward_on_fitted_schedule(self, tiny_config):
        schedule, _ = train(default_training_set(), tiny_config)
        grid = tiny_config.grid
        fits = fit_schedule(schedule, grid)
        sample = default_training_set()[3]
        value = evaluate_indicator(sample.initial, fits, grid)
        assert 0.0 <= value <= 1.0
        direct = evaluate_indicator(sample.initial, fits, grid,
                                    schedule=schedule)
        output, _ = forward(sample, schedule, grid)
        assert direct == pytest.approx(output)
