"""Per-timestep perturbation channels and the physicality projection.

Magnitude noise adds zero-mean random numbers to the elements of rho;
phase noise rotates off-diagonal elements by random angles; complex noise
does both. Every channel ends with ``project_physical`` so the result is a
valid density matrix again.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from qnn_entanglement.exceptions import DegenerateStateError, \
    InvalidArgumentError
from qnn_entanglement.models.noise_model import (
    NoiseDistribution, NoiseKind, NoiseSpec
)
from qnn_entanglement.models.quantum_state import DensityMatrix

logger = logging.getLogger(__name__)

DEGENERATE_TRACE = 1e-9
UNIFORM_HALF_WIDTH = np.sqrt(3.0)

_UPPER = np.triu_indices(4)
_STRICT_UPPER = np.triu_indices(4, k=1)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator addressed by (seed, key...), order-free."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    )


def _draw(rng: np.random.Generator, amplitude: float, size: int,
          distribution: NoiseDistribution) -> np.ndarray:
    if distribution == NoiseDistribution.UNIFORM:
        half_width = UNIFORM_HALF_WIDTH * amplitude
        return rng.uniform(-half_width, half_width, size)
    return rng.normal(0.0, amplitude, size)


def _check_amplitude(amplitude: float) -> float:
    amplitude = float(amplitude)
    if not np.isfinite(amplitude) or amplitude < 0:
        raise InvalidArgumentError(
            f"Noise amplitude must be finite and >= 0, got {amplitude!r}")
    return amplitude


def magnitude_kick(m: np.ndarray, amplitude: float, rng: np.random.Generator,
                   distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN
                   ) -> np.ndarray:
    """Add random reals (and imaginary parts off the diagonal), unprojected.

    Draws are real parts for the 10 upper-triangle elements, then imaginary
    parts for the 6 strictly upper ones; the lower triangle mirrors them.
    """
    real = _draw(rng, amplitude, len(_UPPER[0]), distribution)
    imag = _draw(rng, amplitude, len(_STRICT_UPPER[0]), distribution)
    kick = np.zeros((4, 4), dtype=complex)
    kick[_UPPER] = real
    kick[_STRICT_UPPER] += 1j * imag
    kick = kick + np.triu(kick, k=1).conj().T
    return m + kick


def phase_kick(m: np.ndarray, amplitude: float, rng: np.random.Generator,
               distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN
               ) -> np.ndarray:
    """Rotate strictly-upper elements by random phases, unprojected."""
    theta = _draw(rng, amplitude, len(_STRICT_UPPER[0]), distribution)
    out = np.array(m, dtype=complex)
    out[_STRICT_UPPER] = out[_STRICT_UPPER] * np.exp(1j * theta)
    lower = (_STRICT_UPPER[1], _STRICT_UPPER[0])
    out[lower] = out[_STRICT_UPPER].conj()
    return out


def project_array(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4) or not np.all(np.isfinite(m)):
        raise InvalidArgumentError("Projection needs a finite 4x4 matrix")
    hermitian = 0.5 * (m + m.conj().T)
    eigvals, eigvecs = np.linalg.eigh(hermitian)
    clamped = np.clip(eigvals, 0.0, None)
    total = float(np.sum(clamped))
    if total <= DEGENERATE_TRACE:
        raise DegenerateStateError(
            f"Trace {total:.3e} after clamping negative eigenvalues; "
            "cannot renormalize"
        )
    if eigvals[0] < -1e-3:
        logger.debug(f"Projection clamped eigenvalue {eigvals[0]:.3e}")
    rho = (eigvecs * (clamped / total)) @ eigvecs.conj().T
    return 0.5 * (rho + rho.conj().T)


def project_physical(m) -> DensityMatrix:
    if isinstance(m, DensityMatrix):
        m = m.elements
    return DensityMatrix(project_array(m), validate=False)


def perturb_magnitude(
    rho: DensityMatrix, amplitude: float, rng: np.random.Generator,
    distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN,
) -> DensityMatrix:
    if _check_amplitude(amplitude) == 0.0:
        return rho.copy()
    return project_physical(
        magnitude_kick(rho.elements, amplitude, rng, distribution))


def perturb_phase(
    rho: DensityMatrix, amplitude: float, rng: np.random.Generator,
    distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN,
) -> DensityMatrix:
    if _check_amplitude(amplitude) == 0.0:
        return rho.copy()
    return project_physical(
        phase_kick(rho.elements, amplitude, rng, distribution))


def perturb_complex(
    rho: DensityMatrix, amplitude: float, rng: np.random.Generator,
    distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN,
) -> DensityMatrix:
    if _check_amplitude(amplitude) == 0.0:
        return rho.copy()
    kicked = phase_kick(rho.elements, amplitude, rng, distribution)
    kicked = magnitude_kick(kicked, amplitude, rng, distribution)
    return project_physical(kicked)


def apply_channel(m: np.ndarray, noise: NoiseSpec,
                  rng: np.random.Generator) -> np.ndarray:
    """Array-level channel used inside the propagation loop."""
    if noise.is_identity:
        return m
    if noise.kind == NoiseKind.MAGNITUDE:
        kicked = magnitude_kick(m, noise.amplitude, rng, noise.distribution)
    elif noise.kind == NoiseKind.PHASE:
        kicked = phase_kick(m, noise.amplitude, rng, noise.distribution)
    elif noise.kind == NoiseKind.COMPLEX:
        kicked = phase_kick(m, noise.amplitude, rng, noise.distribution)
        kicked = magnitude_kick(kicked, noise.amplitude, rng,
                                noise.distribution)
    else:
        raise InvalidArgumentError(f"Unknown noise kind: {noise.kind}")
    return project_array(kicked)


def perturb(rho: DensityMatrix, noise: NoiseSpec,
            rng: Optional[np.random.Generator] = None) -> DensityMatrix:
    if rng is None:
        rng = make_rng(noise.seed)
    return DensityMatrix(apply_channel(rho.elements, noise, rng),
                         validate=False)


def accumulate_noise(rho0: np.ndarray, noise: NoiseSpec, n_steps: int,
                     rng: np.random.Generator,
                     unitaries: Optional[np.ndarray] = None) -> np.ndarray:
    """Apply the channel n_steps times.

    With ``unitaries`` each kick follows the matching step unitary, as in
    a propagation, and the result is rotated back by the inverse of the
    clean total unitary. Without noise that returns rho0.
    """
    rho = np.asarray(rho0, dtype=complex)
    if unitaries is None:
        for _ in range(n_steps):
            rho = apply_channel(rho, noise, rng)
        return rho

    unitaries = np.asarray(unitaries, dtype=complex)
    if unitaries.shape != (n_steps, 4, 4):
        raise InvalidArgumentError(
            f"Expected {n_steps} step unitaries, got shape "
            f"{unitaries.shape}"
        )
    total = np.eye(4, dtype=complex)
    for U in unitaries:
        rho = U @ rho @ U.conj().T
        rho = apply_channel(0.5 * (rho + rho.conj().T), noise, rng)
        total = U @ total
    rho = total.conj().T @ rho @ total
    return 0.5 * (rho + rho.conj().T)


def mean_and_stderr(values: Sequence[float]):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("No samples to average")
    mean = float(np.mean(values))
    if values.size == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))
