"""Fourier-form parameter functions.

Given omega, the amplitudes are a linear least-squares problem, so the
fit scans a geometric grid of candidate frequencies and then refines the
best one with a bounded scalar minimization on the residual.
"""
import logging
from typing import Dict, Mapping

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from qnn_entanglement.exceptions import InsufficientDataError, \
    InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.schedule_model import (
    EPS_A, EPS_B, FUNCTION_COLUMNS, FUNCTION_NAMES, FourierFit, K_A, K_B,
    ParameterSchedule, ZETA
)
from qnn_entanglement.models.training_model import FourierOrders

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 6
DEFAULT_CANDIDATES = 2000
LOW_FREQUENCY_FACTOR = 0.25
REFINE_XATOL = 1e-14


def evaluate_fourier(fit: FourierFit, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidArgumentError("Fourier series is defined for t >= 0")
    wt = fit.omega * t_arr
    value = fit.a0 + fit.a1 * np.cos(wt) + fit.b1 * np.sin(wt)
    if fit.order == 2:
        value = value + fit.a2 * np.cos(2 * wt) + fit.b2 * np.sin(2 * wt)
    if np.ndim(value) == 0:
        return float(value)
    return value


def _design_matrix(t: np.ndarray, omega: float, order: int) -> np.ndarray:
    columns = [np.ones_like(t), np.cos(omega * t), np.sin(omega * t)]
    if order == 2:
        columns += [np.cos(2 * omega * t), np.sin(2 * omega * t)]
    return np.column_stack(columns)


def _solve(t: np.ndarray, y: np.ndarray, omega: float, order: int):
    design = _design_matrix(t, omega, order)
    coeffs, _, _, _ = scipy.linalg.lstsq(design, y)
    residual = design @ coeffs - y
    return coeffs, float(np.sqrt(np.mean(residual ** 2)))


def frequency_bounds(grid: TimeGrid):
    low = LOW_FREQUENCY_FACTOR * 2 * np.pi / grid.t_final
    high = 2 * np.pi / (4 * grid.dt)
    return low, high


def fit_fourier(column, grid: TimeGrid, order: int = 2,
                n_candidates: int = DEFAULT_CANDIDATES) -> FourierFit:
    y = np.asarray(column, dtype=float).reshape(-1)
    if y.size < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"Need at least {MIN_FIT_POINTS} points to fit, got {y.size}"
        )
    if y.size != grid.n_steps:
        raise InvalidArgumentError(
            f"Column has {y.size} values but the grid has {grid.n_steps} steps"
        )
    if order not in (1, 2):
        raise InvalidArgumentError(f"Fourier order must be 1 or 2, got {order}")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("Cannot fit non-finite values")

    t = grid.midpoints()
    low, high = frequency_bounds(grid)
    candidates = np.geomspace(low, high, n_candidates)
    residuals = np.array([_solve(t, y, w, order)[1] for w in candidates])
    best = int(np.argmin(residuals))
    omega, rms = float(candidates[best]), float(residuals[best])

    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, n_candidates - 1)]
    refined = minimize_scalar(
        lambda w: _solve(t, y, w, order)[1],
        bounds=(lo, hi), method="bounded",
        options={"xatol": REFINE_XATOL},
    )
    if refined.success and refined.fun < rms:
        omega, rms = float(refined.x), float(refined.fun)

    coeffs, rms = _solve(t, y, omega, order)
    amplitudes = dict(zip(("a0", "a1", "b1", "a2", "b2"), coeffs))
    fit = FourierFit(omega=omega, order=order, rms_residual=rms,
                     **{k: float(v) for k, v in amplitudes.items()})
    logger.debug(f"Fourier fit order {order}: omega={omega:.6g}, "
                 f"rms={rms:.3e}")
    return fit


def fit_schedule(schedule: ParameterSchedule, grid: TimeGrid,
                 orders: FourierOrders = None) -> Dict[str, FourierFit]:
    """One fit per parameter function; untied pairs are fit on their mean."""
    orders = orders or FourierOrders()
    fits = {}
    for name in FUNCTION_NAMES:
        cols = FUNCTION_COLUMNS[name]
        column = schedule.values[:, cols].mean(axis=1)
        if len(cols) > 1 and not np.array_equal(
                schedule.values[:, cols[0]], schedule.values[:, cols[1]]):
            logger.warning(f"{name} columns are untied; fitting their mean")
        fits[name] = fit_fourier(column, grid, orders.order_for(name),
                                 orders.n_candidates)
        logger.info(
            f"Fitted {name}: omega={fits[name].omega:.5g}, "
            f"rms={fits[name].rms_residual:.3e}"
        )
    return fits


def sample_to_schedule(fits: Mapping[str, FourierFit],
                       grid: TimeGrid) -> ParameterSchedule:
    missing = [name for name in FUNCTION_NAMES if name not in fits]
    if missing:
        raise InvalidArgumentError(f"Missing fits for: {', '.join(missing)}")
    t = grid.midpoints()
    values = np.empty((grid.n_steps, 5))
    k = evaluate_fourier(fits["K"], t)
    eps = evaluate_fourier(fits["eps"], t)
    values[:, K_A] = k
    values[:, K_B] = k
    values[:, EPS_A] = eps
    values[:, EPS_B] = eps
    values[:, ZETA] = evaluate_fourier(fits["zeta"], t)
    return ParameterSchedule(values, tie_K=True, tie_eps=True)


RANDOMIZE_SPAN = 3.0


def _log_uniform(rng: np.random.Generator, center: float) -> float:
    return float(center * np.exp(rng.uniform(-np.log(RANDOMIZE_SPAN),
                                             np.log(RANDOMIZE_SPAN))))


def randomize_fit(fit: FourierFit, rng: np.random.Generator,
                  frequency: bool = False) -> FourierFit:
    """Replace the amplitudes (or only omega) by values of the same size.

    Magnitudes are log-uniform within a factor of three of the originals.
    Harmonic amplitudes get a random sign, a0 keeps its own; zero
    coefficients stay zero.
    """
    if frequency:
        return fit.model_copy(update={"omega": _log_uniform(rng, fit.omega)})

    update = {}
    for name in ("a0", "a1", "b1", "a2", "b2"):
        value = getattr(fit, name)
        if value == 0.0:
            continue
        magnitude = _log_uniform(rng, abs(value))
        if name == "a0":
            sign = np.sign(value)
        else:
            sign = rng.choice((-1.0, 1.0))
        update[name] = float(sign * magnitude)
    return fit.model_copy(update=update)
