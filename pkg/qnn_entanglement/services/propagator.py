"""Piecewise-constant unitary evolution of two-qubit density matrices.

Units are hbar = 1, time in ns and couplings in rad/ns. Within each
timestep H is constant, so the step is exactly rho -> U rho U^dagger with
U = exp(-i H dt), built from the eigendecomposition of H.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import (
    GENERATORS, HamiltonianParams, TimeGrid
)
from qnn_entanglement.models.noise_model import NoiseSpec
from qnn_entanglement.models.quantum_state import (
    DensityMatrix, HERMITIAN_TOL, SIGMA_ZZ, StateLike, Trajectory,
    as_density_matrix
)
from qnn_entanglement.models.schedule_model import ParameterSchedule
from qnn_entanglement.services import noise_service

logger = logging.getLogger(__name__)

CORRELATION_IMAG_TOL = 1e-10


def build_hamiltonian(params: HamiltonianParams) -> np.ndarray:
    return np.einsum('p,pij->ij', params.as_array(), GENERATORS)


def build_hamiltonians(values: np.ndarray) -> np.ndarray:
    """Stacked Hamiltonians for an (n_steps, 5) array of schedule rows."""
    return np.einsum('np,pij->nij', np.asarray(values, dtype=float),
                     GENERATORS)


def spectral_unitaries(
    hamiltonians: np.ndarray, dt: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues, eigenvectors and exp(-i H dt) for a stack of H."""
    eigvals, eigvecs = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * dt * eigvals)
    unitaries = np.einsum('...ij,...j,...kj->...ik', eigvecs, phases,
                          eigvecs.conj())
    return eigvals, eigvecs, unitaries


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _check_hamiltonian(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.shape != (4, 4):
        raise InvalidArgumentError(f"Hamiltonian must be 4x4, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InvalidArgumentError("Hamiltonian has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL * scale:
        raise InvalidArgumentError("Hamiltonian is not Hermitian")
    return H


def step_evolve(rho: DensityMatrix, H: np.ndarray,
                dt: float) -> DensityMatrix:
    if not dt > 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt!r}")
    H = _check_hamiltonian(H)
    _, _, U = spectral_unitaries(H, dt)
    evolved = _hermitize(U @ rho.elements @ U.conj().T)
    return DensityMatrix(evolved, validate=False)


def evolve_states(
    rho0: np.ndarray,
    unitaries: np.ndarray,
    noise: Optional[NoiseSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Run the step loop on raw arrays; returns all n_steps + 1 states."""
    n_steps = unitaries.shape[0]
    states = np.empty((n_steps + 1, 4, 4), dtype=complex)
    states[0] = rho0
    rho = rho0
    apply_noise = noise is not None and not noise.is_identity
    for k in range(n_steps):
        U = unitaries[k]
        rho = _hermitize(U @ rho @ U.conj().T)
        if apply_noise:
            rho = noise_service.apply_channel(rho, noise, rng)
        states[k + 1] = rho
    return states


def propagate(
    rho0: StateLike,
    schedule: ParameterSchedule,
    grid: TimeGrid,
    noise: Optional[NoiseSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> Trajectory:
    if schedule.n_steps != grid.n_steps:
        raise InvalidArgumentError(
            f"Schedule has {schedule.n_steps} steps but the grid has "
            f"{grid.n_steps}"
        )
    rho0 = as_density_matrix(rho0)
    if noise is not None and rng is None:
        rng = noise_service.make_rng(noise.seed)

    _, _, unitaries = spectral_unitaries(
        build_hamiltonians(schedule.values), grid.dt
    )
    states = evolve_states(rho0.elements, unitaries, noise, rng)
    logger.debug(
        f"Propagated {grid.n_steps} steps (dt={grid.dt} ns, "
        f"noise={noise.kind.value if noise else 'none'})"
    )
    return Trajectory(states)


def correlation_zz(rho: np.ndarray) -> float:
    """<sigma_z (x) sigma_z> for a raw 4x4 array."""
    value = np.trace(rho @ SIGMA_ZZ)
    if abs(value.imag) > CORRELATION_IMAG_TOL:
        raise InvalidArgumentError(
            f"<zz> has imaginary residue {value.imag:.3e}; "
            "the input is not Hermitian"
        )
    return float(value.real)


def output_correlation(rho: StateLike) -> float:
    """Squared final-time correlation, the indicator's measured output."""
    s = correlation_zz(as_density_matrix(rho).elements)
    return min(1.0, s * s)
