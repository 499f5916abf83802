"""Dynamic learning of the parameter schedules.

The loss for one sample is L = (<zz>(t_f)^2 - target)^2. Its gradient
with respect to every per-step parameter comes from one forward trajectory
and one backward costate sweep over the same unitaries. Under noise the
draws of the forward pass are frozen and the sweep treats them as
constants.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from qnn_entanglement.exceptions import InvalidArgumentError, \
    TrainingDivergedError
from qnn_entanglement.interfaces.observer_interface import TrainingObserver
from qnn_entanglement.logging_config import TRAINING_ACTIVITY_LOGGER
from qnn_entanglement.models.hamiltonian_model import GENERATORS, TimeGrid
from qnn_entanglement.models.noise_model import NoiseSpec
from qnn_entanglement.models.quantum_state import (
    PureState, SIGMA_ZZ, StateLike, Trajectory, as_density_matrix
)
from qnn_entanglement.models.schedule_model import FourierFit, \
    ParameterSchedule
from qnn_entanglement.models.training_model import (
    EpochRecord, TrainingConfig, TrainingSample
)
from qnn_entanglement.models.training_subject_model import TrainingSubject
from qnn_entanglement.services import noise_service
from qnn_entanglement.services.fourier_service import sample_to_schedule
from qnn_entanglement.services.propagator import (
    build_hamiltonians, correlation_zz, evolve_states, output_correlation,
    spectral_unitaries
)

logger = logging.getLogger(__name__)
activity_logger = logging.getLogger(TRAINING_ACTIVITY_LOGGER)

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 10
LEARNING_RATE_CANDIDATES = (1e-5, 3e-5, 1e-4, 3e-4)
LEARNING_RATE_TRIAL_EPOCHS = 20
FD_STEP = 1e-6

TRAINING_SET_SPEC = (
    ("bell", 1.0),
    ("flat", 0.0),
    ("c", 0.0),
    ("p", 0.44),
)


def default_training_set() -> List[TrainingSample]:
    return [TrainingSample(PureState.named(name), target, name=name)
            for name, target in TRAINING_SET_SPEC]


def _check_lengths(schedule: ParameterSchedule, grid: TimeGrid) -> None:
    if schedule.n_steps != grid.n_steps:
        raise InvalidArgumentError(
            f"Schedule has {schedule.n_steps} steps but the grid has "
            f"{grid.n_steps}"
        )


def _loss(output: float, target: float) -> float:
    return (output - target) ** 2


def forward(
    sample: TrainingSample,
    schedule: ParameterSchedule,
    grid: TimeGrid,
    noise: Optional[NoiseSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, Trajectory]:
    _check_lengths(schedule, grid)
    if noise is not None and rng is None:
        rng = noise_service.make_rng(noise.seed)
    rho0 = sample.initial.to_density_matrix().elements
    _, _, unitaries = spectral_unitaries(
        build_hamiltonians(schedule.values), grid.dt)
    states = evolve_states(rho0, unitaries, noise, rng)
    trajectory = Trajectory(states)
    return output_correlation(trajectory.final), trajectory


def _divided_differences(eigvals: np.ndarray, dt: float) -> np.ndarray:
    """Daleckii-Krein kernel of f(x) = exp(-i x dt) for each step.

    Written with sinc so that equal and nearly equal eigenvalues need no
    special case.
    """
    mean = 0.5 * (eigvals[:, :, None] + eigvals[:, None, :])
    gap = eigvals[:, :, None] - eigvals[:, None, :]
    return (-1j * dt * np.exp(-1j * dt * mean)
            * np.sinc(dt * gap / (2 * np.pi)))


def _costate_sweep(states: np.ndarray, eigvals: np.ndarray,
                   eigvecs: np.ndarray, unitaries: np.ndarray, dt: float,
                   target: float) -> np.ndarray:
    n_steps = unitaries.shape[0]
    s = correlation_zz(states[-1])
    output = s * s
    # dL/drho(t_f) for L = (s^2 - target)^2 with s = Tr[rho ZZ]
    costate = 4.0 * (output - target) * s * SIGMA_ZZ

    kernel = _divided_differences(eigvals, dt)
    # V^dagger G_p V for every step and generator
    rotated = np.einsum('nai,pab,nbj->npij', eigvecs.conj(), GENERATORS,
                        eigvecs)
    phases = np.exp(-1j * dt * eigvals)

    gradient = np.zeros((n_steps, GENERATORS.shape[0]))
    for k in range(n_steps - 1, -1, -1):
        V = eigvecs[k]
        V_dag = V.conj().T
        rho_eig = V_dag @ states[k] @ V
        costate_eig = V_dag @ costate @ V
        # W = rho' E^dagger Lambda' in the eigenbasis of H_k
        w = (rho_eig * phases[k].conj()[None, :]) @ costate_eig
        weights = kernel[k] * w.T
        gradient[k] = 2.0 * np.real(
            np.einsum('pij,ij->p', rotated[k], weights))
        U = unitaries[k]
        costate = U.conj().T @ costate @ U
    return gradient


def adjoint_gradient(
    sample: TrainingSample,
    schedule: ParameterSchedule,
    grid: TimeGrid,
    trajectory: Optional[Trajectory] = None,
) -> np.ndarray:
    """Exact gradient of the discrete dynamics, shape (n_steps, 5).

    Pass the trajectory of a noisy forward pass to differentiate through
    its frozen draws; otherwise a noiseless forward pass is run.
    """
    _check_lengths(schedule, grid)
    eigvals, eigvecs, unitaries = spectral_unitaries(
        build_hamiltonians(schedule.values), grid.dt)
    if trajectory is None:
        rho0 = sample.initial.to_density_matrix().elements
        states = evolve_states(rho0, unitaries)
    else:
        states = trajectory.states
        if states.shape[0] != grid.n_steps + 1:
            raise InvalidArgumentError(
                "Trajectory length does not match the grid")
    raw = _costate_sweep(states, eigvals, eigvecs, unitaries, grid.dt,
                         sample.target)
    return schedule.tie_gradient(raw)


def _loss_from_unitaries(rho0: np.ndarray, unitaries: np.ndarray,
                         target: float) -> float:
    final = evolve_states(rho0, unitaries)[-1]
    s = correlation_zz(final)
    return _loss(s * s, target)


def fd_gradient(
    sample: TrainingSample,
    schedule: ParameterSchedule,
    grid: TimeGrid,
    h: float = FD_STEP,
    steps: Optional[Iterable[int]] = None,
) -> np.ndarray:
    """Central differences, one forward pair per independent parameter.

    Tied columns are moved together, so the result holds the summed
    derivative in both of them. ``steps`` limits the work to a subset of
    timesteps; other rows are left at zero.
    """
    if not h > 0:
        raise InvalidArgumentError(f"Finite-difference step must be > 0, "
                                   f"got {h!r}")
    _check_lengths(schedule, grid)
    rho0 = sample.initial.to_density_matrix().elements
    values = schedule.values
    _, _, unitaries = spectral_unitaries(build_hamiltonians(values), grid.dt)
    gradient = np.zeros_like(values)
    step_list = range(grid.n_steps) if steps is None else list(steps)

    for k in step_list:
        for group in schedule.independent_columns():
            perturbed = []
            for sign in (1.0, -1.0):
                row = values[k].copy()
                row[list(group)] += sign * h
                _, _, u_k = spectral_unitaries(
                    build_hamiltonians(row[None, :]), grid.dt)
                local = unitaries.copy()
                local[k] = u_k[0]
                perturbed.append(
                    _loss_from_unitaries(rho0, local, sample.target))
            derivative = (perturbed[0] - perturbed[1]) / (2 * h)
            for col in group:
                gradient[k, col] = derivative
    return gradient


def initial_schedule(config: TrainingConfig,
                     rng: np.random.Generator) -> ParameterSchedule:
    init = config.init
    n = config.grid.n_steps
    base = np.array([init.k, init.k, init.eps, init.eps, init.zeta])
    jitter = rng.uniform(-init.jitter, init.jitter, size=(n, 5))
    values = base[None, :] * (1.0 + jitter)
    return ParameterSchedule.tied(values, tie_K=config.tie_K,
                                  tie_eps=config.tie_eps)


class Trainer(TrainingSubject):
    """Batch gradient descent over a fixed training set."""

    def __init__(self, samples: Sequence[TrainingSample],
                 config: TrainingConfig, workers: int = 1):
        super().__init__()
        if not samples:
            raise InvalidArgumentError("Training set is empty")
        if config.learning_rate == "auto":
            raise InvalidArgumentError(
                "Resolve learning_rate='auto' with select_learning_rate first")
        self.samples = list(samples)
        self.config = config
        self.workers = max(1, int(workers))

    def _sample_pass(self, args) -> Tuple[float, np.ndarray]:
        index, sample, schedule, epoch = args
        grid = self.config.grid
        noise = self.config.noise
        rng = None
        if noise is not None:
            rng = noise_service.stream_rng(noise.seed, epoch, index)
        output, trajectory = forward(sample, schedule, grid, noise, rng)
        gradient = adjoint_gradient(sample, schedule, grid,
                                    trajectory=trajectory)
        return output, gradient

    def _epoch(self, schedule: ParameterSchedule, epoch: int,
               pool: Optional[ThreadPoolExecutor]):
        jobs = [(i, sample, schedule, epoch)
                for i, sample in enumerate(self.samples)]
        if pool is None:
            results = [self._sample_pass(job) for job in jobs]
        else:
            results = list(pool.map(self._sample_pass, jobs))
        outputs = [r[0] for r in results]
        gradient = np.zeros_like(schedule.values)
        for _, g in results:
            gradient += g
        return outputs, gradient

    def run(self, rng: Optional[np.random.Generator] = None
            ) -> Tuple[ParameterSchedule, List[EpochRecord]]:
        config = self.config
        if rng is None:
            rng = noise_service.make_rng(config.seed)
        schedule = initial_schedule(config, rng)
        targets = [s.target for s in self.samples]
        history: List[EpochRecord] = []
        strikes = 0
        noise_label = (f"{config.noise.kind.value}@{config.noise.amplitude}"
                       if config.noise else "none")
        logger.info(
            f"Training on {len(self.samples)} samples: lr="
            f"{config.learning_rate}, max_epochs={config.max_epochs}, "
            f"grid=({config.grid.dt} ns, {config.grid.n_steps}), "
            f"noise={noise_label}"
        )

        pool = (ThreadPoolExecutor(max_workers=self.workers)
                if self.workers > 1 else None)
        try:
            for epoch in range(config.max_epochs):
                outputs, gradient = self._epoch(schedule, epoch, pool)
                rms = EpochRecord.rms_of(outputs, targets)
                if not np.isfinite(rms) or not np.all(np.isfinite(gradient)):
                    self.notify(None, "diverged", {"epoch": epoch})
                    raise TrainingDivergedError(
                        f"Non-finite error at epoch {epoch}", history)
                record = EpochRecord(epoch=epoch, rms_error=rms,
                                     per_sample_outputs=outputs)
                history.append(record)
                self.notify(record, "epoch", {"schedule": schedule})

                if rms > DIVERGENCE_FACTOR * history[0].rms_error:
                    strikes += 1
                    logger.warning(
                        f"Epoch {epoch}: rms {rms:.3e} above "
                        f"{DIVERGENCE_FACTOR:g}x initial ({strikes}/"
                        f"{DIVERGENCE_PATIENCE})"
                    )
                    if strikes >= DIVERGENCE_PATIENCE:
                        self.notify(record, "diverged", {"epoch": epoch})
                        raise TrainingDivergedError(
                            f"Training diverged at epoch {epoch} "
                            f"(rms {rms:.3e})", history)
                else:
                    strikes = 0

                if rms <= config.stop_rms:
                    logger.info(f"Reached stop_rms at epoch {epoch}")
                    break
                if epoch == config.max_epochs - 1:
                    # The final record describes the returned schedule
                    break
                schedule = schedule.with_values(
                    schedule.values - config.learning_rate * gradient)
        finally:
            if pool is not None:
                pool.shutdown()

        logger.info(
            f"Training finished after {len(history)} epochs, "
            f"rms={history[-1].rms_error:.3e}"
        )
        self.notify(history[-1], "finished", {"schedule": schedule})
        return schedule, history


class TrainingActivityLogger(TrainingObserver):
    """Observer writing progress to the training_activity log."""

    def __init__(self, every: int = 10):
        self.every = max(1, int(every))

    def update(self, record, event_type, event_data):
        if event_type == "epoch" and record.epoch % self.every == 0:
            outputs = ", ".join(f"{o:.4f}" for o in record.per_sample_outputs)
            activity_logger.info(
                f"epoch {record.epoch}: rms={record.rms_error:.4e} "
                f"outputs=[{outputs}]"
            )
        elif event_type == "finished":
            activity_logger.info(
                f"finished at epoch {record.epoch}: "
                f"rms={record.rms_error:.4e}"
            )
        elif event_type == "diverged":
            activity_logger.error(f"diverged: {event_data}")


def train(samples: Sequence[TrainingSample], config: TrainingConfig,
          rng: Optional[np.random.Generator] = None,
          observers: Iterable = (), workers: int = 1
          ) -> Tuple[ParameterSchedule, List[EpochRecord]]:
    if config.learning_rate == "auto":
        rate = select_learning_rate(samples, config, workers=workers)
        config = config.model_copy(update={"learning_rate": rate})
    trainer = Trainer(samples, config, workers=workers)
    for observer in observers:
        trainer.attach(observer)
    return trainer.run(rng)


def select_learning_rate(
    samples: Sequence[TrainingSample], config: TrainingConfig,
    candidates: Sequence[float] = LEARNING_RATE_CANDIDATES,
    trial_epochs: int = LEARNING_RATE_TRIAL_EPOCHS, workers: int = 1,
) -> float:
    """Short trial runs; returns the rate with the lowest final rms."""
    results: Dict[float, float] = {}
    for rate in candidates:
        trial = config.model_copy(update={
            "learning_rate": rate,
            "max_epochs": min(trial_epochs, config.max_epochs),
        })
        try:
            _, history = Trainer(samples, trial, workers=workers).run()
            results[rate] = history[-1].rms_error
        except TrainingDivergedError:
            logger.info(f"Learning rate {rate:g} diverged in its trial run")
            continue
        logger.info(f"Learning rate {rate:g}: trial rms "
                    f"{results[rate]:.4e}")
    if not results:
        raise TrainingDivergedError("Every candidate learning rate diverged")
    best = min(results, key=results.get)
    logger.info(f"Selected learning rate {best:g}")
    return best


def evaluate_indicator(
    state: StateLike,
    fits: Mapping[str, FourierFit],
    grid: TimeGrid,
    noise: Optional[NoiseSpec] = None,
    rng: Optional[np.random.Generator] = None,
    schedule: Optional[ParameterSchedule] = None,
) -> float:
    """The trained indicator: sample the fits, evolve, measure <zz>^2."""
    if schedule is None:
        schedule = sample_to_schedule(fits, grid)
    _check_lengths(schedule, grid)
    if noise is not None and rng is None:
        rng = noise_service.make_rng(noise.seed)
    rho0 = as_density_matrix(state).elements
    _, _, unitaries = spectral_unitaries(
        build_hamiltonians(schedule.values), grid.dt)
    final = evolve_states(rho0, unitaries, noise, rng)[-1]
    s = correlation_zz(final)
    return min(1.0, s * s)
