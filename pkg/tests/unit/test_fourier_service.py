import numpy as np
import pytest

from qnn_entanglement.exceptions import InsufficientDataError, \
    InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.schedule_model import (
    EPS_A, EPS_B, FourierFit, K_A, K_B, ParameterSchedule, ZETA
)
from qnn_entanglement.models.training_model import FourierOrders
from qnn_entanglement.services.fourier_service import (
    evaluate_fourier, fit_fourier, fit_schedule, frequency_bounds,
    randomize_fit, sample_to_schedule
)
from qnn_entanglement.services.noise_service import make_rng


@pytest.fixture
def grid():
    return TimeGrid()


@pytest.fixture
def k_fit():
    return FourierFit(a0=2e-3, a1=1e-3, b1=-5e-4, a2=3e-4, b2=2e-4,
                      omega=0.05, order=2)


@pytest.fixture
def zeta_fit():
    return FourierFit(a0=8e-5, a1=3e-5, b1=1e-5, omega=0.03, order=1)


class TestEvaluate:

    def test_scalar_at_zero(self, k_fit):
        assert evaluate_fourier(k_fit, 0.0) == pytest.approx(2e-3 + 1e-3 +
                                                             3e-4)

    def test_order_one_ignores_second_harmonic(self, zeta_fit):
        t = np.array([1.0, 7.5])
        expected = 8e-5 + 3e-5 * np.cos(0.03 * t) + 1e-5 * np.sin(0.03 * t)
        np.testing.assert_allclose(evaluate_fourier(zeta_fit, t), expected)

    def test_negative_time(self, k_fit):
        with pytest.raises(InvalidArgumentError, match="t >= 0"):
            evaluate_fourier(k_fit, -1.0)


class TestFitFourier:

    def test_recovers_order_two(self, grid, k_fit):
        column = evaluate_fourier(k_fit, grid.midpoints())
        fit = fit_fourier(column, grid, order=2)
        assert fit.omega == pytest.approx(0.05, rel=1e-6)
        np.testing.assert_allclose(fit.amplitudes(), k_fit.amplitudes(),
                                   atol=1e-8)
        assert fit.rms_residual < 1e-9

    def test_recovers_order_one(self, grid, zeta_fit):
        column = evaluate_fourier(zeta_fit, grid.midpoints())
        fit = fit_fourier(column, grid, order=1)
        assert fit.order == 1
        assert fit.a2 == 0.0 and fit.b2 == 0.0
        assert fit.omega == pytest.approx(0.03, rel=1e-6)
        assert fit.a0 == pytest.approx(8e-5, abs=1e-9)

    def test_omega_within_scan_range(self, grid, rng):
        fit = fit_fourier(rng.normal(size=grid.n_steps), grid, order=1,
                          n_candidates=200)
        low, high = frequency_bounds(grid)
        assert low <= fit.omega <= high

    def test_scaling_the_data_scales_the_fit(self, grid, rng, k_fit):
        column = evaluate_fourier(k_fit, grid.midpoints()) + \
            rng.normal(0.0, 1e-4, grid.n_steps)
        fit = fit_fourier(column, grid, order=2, n_candidates=300)
        scaled = fit_fourier(4.0 * column, grid, order=2, n_candidates=300)
        assert scaled.omega == pytest.approx(fit.omega, rel=1e-9)
        np.testing.assert_allclose(scaled.amplitudes(),
                                   4.0 * fit.amplitudes(), rtol=1e-9,
                                   atol=1e-15)
        assert scaled.rms_residual == pytest.approx(4.0 * fit.rms_residual,
                                                    rel=1e-9)

    def test_no_worse_than_a_constant(self, grid, rng):
        for _ in range(5):
            column = rng.normal(size=grid.n_steps)
            fit = fit_fourier(column, grid, order=1, n_candidates=200)
            assert fit.rms_residual <= np.std(column) + 1e-12

    def test_too_few_points(self):
        grid = TimeGrid(dt=0.8, n_steps=5)
        with pytest.raises(InsufficientDataError, match="at least 6"):
            fit_fourier(np.zeros(5), grid)

    def test_length_mismatch(self, grid):
        with pytest.raises(InvalidArgumentError, match="grid"):
            fit_fourier(np.zeros(10), grid)

    def test_bad_order(self):
        grid = TimeGrid(dt=0.8, n_steps=10)
        with pytest.raises(InvalidArgumentError, match="order"):
            fit_fourier(np.zeros(10), grid, order=3)

    def test_non_finite(self):
        grid = TimeGrid(dt=0.8, n_steps=10)
        column = np.zeros(10)
        column[4] = np.inf
        with pytest.raises(InvalidArgumentError, match="non-finite"):
            fit_fourier(column, grid)


class TestScheduleFits:

    def test_sample_to_schedule_is_tied(self, grid, k_fit, zeta_fit):
        eps_fit = zeta_fit.model_copy(update={"a0": 1e-4})
        fits = {"K": k_fit, "eps": eps_fit, "zeta": zeta_fit}
        schedule = sample_to_schedule(fits, grid)
        assert schedule.tie_K and schedule.tie_eps
        np.testing.assert_array_equal(schedule.values[:, K_A],
                                      schedule.values[:, K_B])
        np.testing.assert_array_equal(schedule.values[:, EPS_A],
                                      schedule.values[:, EPS_B])
        np.testing.assert_allclose(
            schedule.values[:, ZETA],
            evaluate_fourier(zeta_fit, grid.midpoints()))

    def test_sample_requires_every_function(self, grid, k_fit):
        with pytest.raises(InvalidArgumentError, match="eps"):
            sample_to_schedule({"K": k_fit, "zeta": k_fit}, grid)

    def test_fit_schedule_uses_orders(self, grid, k_fit, zeta_fit):
        fits = {"K": k_fit, "eps": zeta_fit, "zeta": zeta_fit}
        schedule = sample_to_schedule(fits, grid)
        result = fit_schedule(schedule, grid, FourierOrders(n_candidates=400))
        assert set(result) == {"K", "eps", "zeta"}
        assert result["K"].order == 2
        assert result["zeta"].order == 1
        assert result["K"].a0 == pytest.approx(2e-3, abs=1e-7)

    def test_fit_schedule_of_constant(self):
        grid = TimeGrid(dt=0.8, n_steps=20)
        schedule = ParameterSchedule.constant(20, k=2.5e-3, eps=1e-4,
                                              zeta=1e-4)
        fits = fit_schedule(schedule, grid, FourierOrders(n_candidates=50))
        resampled = sample_to_schedule(fits, grid)
        np.testing.assert_allclose(resampled.values, schedule.values,
                                   atol=1e-12)


class TestRandomizeFit:

    def test_frequency_only(self, k_fit):
        rng = make_rng(0)
        for _ in range(20):
            changed = randomize_fit(k_fit, rng, frequency=True)
            np.testing.assert_array_equal(changed.amplitudes(),
                                          k_fit.amplitudes())
            assert k_fit.omega / 3 <= changed.omega <= 3 * k_fit.omega

    def test_amplitudes_keep_scale(self, k_fit):
        rng = make_rng(1)
        for _ in range(20):
            changed = randomize_fit(k_fit, rng)
            assert changed.omega == k_fit.omega
            assert changed.a0 > 0
            ratios = np.abs(changed.amplitudes()) / np.abs(
                k_fit.amplitudes())
            assert np.all(ratios >= 1 / 3 - 1e-12)
            assert np.all(ratios <= 3 + 1e-12)

    def test_zero_coefficients_stay_zero(self, zeta_fit):
        changed = randomize_fit(zeta_fit, make_rng(2))
        assert changed.a2 == 0.0 and changed.b2 == 0.0
