"""Concurrence and entanglement of formation of two-qubit states.

With rho = W W^dagger from the eigendecomposition, the square roots of the
eigenvalues of rho rho~ are the singular values of W^T (sigma_y x sigma_y) W.
Eigenvalues below EIGEN_DUST are dropped from W first.
"""
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.special import entr

from qnn_entanglement.exceptions import InvalidArgumentError, \
    InvalidStateError
from qnn_entanglement.models.noise_model import NoiseSpec
from qnn_entanglement.models.quantum_state import (
    DensityMatrix, PSD_TOL, PureState, SIGMA_YY, as_density_matrix
)
from qnn_entanglement.models.training_model import EntanglementReport
from qnn_entanglement.services.noise_service import accumulate_noise, \
    project_array

logger = logging.getLogger(__name__)

# States this far below zero are treated as noise residue and projected
MARGINAL_PSD_TOL = 1e-8
EIGEN_DUST = 1e-13


def _physical_array(rho) -> np.ndarray:
    if isinstance(rho, (DensityMatrix, PureState)):
        return as_density_matrix(rho).elements
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4) or not np.all(np.isfinite(m)):
        raise InvalidStateError("Expected a finite 4x4 density matrix")
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if min_eig < -MARGINAL_PSD_TOL:
        raise InvalidStateError(
            f"State is not positive semidefinite (min eigenvalue "
            f"{min_eig:.3e})"
        )
    if min_eig < -PSD_TOL or abs(np.trace(m) - 1.0) > 1e-12:
        return project_array(m)
    return m


def concurrence(rho: Union[DensityMatrix, PureState, np.ndarray]) -> float:
    m = _physical_array(rho)
    weights, vectors = scipy.linalg.eigh(m)
    keep = weights > EIGEN_DUST
    w = vectors[:, keep] * np.sqrt(weights[keep])
    tau = w.T @ SIGMA_YY @ w
    lambdas = np.zeros(4)
    lambdas[:tau.shape[0]] = scipy.linalg.svdvals(tau)
    value = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]
    return float(min(1.0, max(0.0, value)))


def binary_entropy(x: float) -> float:
    return float((entr(x) + entr(1.0 - x)) / math.log(2.0))


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, float(c)))
    x = 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c)))
    return min(1.0, max(0.0, binary_entropy(x)))


def entanglement_of_formation(rho) -> float:
    return eof_from_concurrence(concurrence(rho))


def entanglement_report(rho) -> EntanglementReport:
    c = concurrence(rho)
    return EntanglementReport(concurrence=c, eof=eof_from_concurrence(c))


def pure_state_concurrence(state: PureState) -> float:
    a, b, c, d = state.amplitudes
    return float(min(1.0, 2.0 * abs(a * d - b * c)))


def make_p_state(gamma: complex) -> PureState:
    """(|00> + gamma|01> + |11>) / sqrt(2 + |gamma|^2)."""
    gamma = complex(gamma)
    if not (math.isfinite(gamma.real) and math.isfinite(gamma.imag)):
        raise InvalidArgumentError(f"gamma must be finite, got {gamma!r}")
    norm = math.sqrt(2.0 + abs(gamma) ** 2)
    return PureState(np.array([1.0, gamma, 0.0, 1.0], dtype=complex) / norm)


def make_m_state(delta: float) -> DensityMatrix:
    """(delta |11><11| + |Phi+><Phi+|) / (delta + 1)."""
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0:
        raise InvalidArgumentError(f"delta must be >= 0, got {delta!r}")
    bell = PureState.named("bell").to_density_matrix().elements
    mixture = bell.copy()
    mixture[3, 3] += delta
    return DensityMatrix(mixture / (delta + 1.0))


def noisy_eof_samples(rho, noise: NoiseSpec, n_steps: int,
                      rngs: Sequence[np.random.Generator],
                      unitaries: Optional[np.ndarray] = None
                      ) -> List[float]:
    """E_F of the noisy propagated state, one value per rng.

    With ``unitaries`` the state is propagated under them with the channel
    after every step and read back in the frame of the clean evolution.
    Without them the channel acts alone for n_steps.
    """
    rho0 = _physical_array(rho)
    if noise.is_identity:
        return [entanglement_of_formation(rho0)] * len(rngs)
    return [entanglement_of_formation(
                accumulate_noise(rho0, noise, n_steps, rng, unitaries))
            for rng in rngs]
