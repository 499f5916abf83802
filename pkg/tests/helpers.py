import numpy as np

from qnn_entanglement.dao.fits_dao import FitsDAO
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.schedule_model import FourierFit, \
    ParameterSchedule


def random_density_matrix(rng, rank=4):
    """Mixed state from a complex Gaussian (Ginibre) matrix."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_pure_amplitudes(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return v / np.linalg.norm(v)


def random_schedule(rng, n_steps, scale=0.05, tie_K=True, tie_eps=True):
    values = rng.uniform(-scale, scale, size=(n_steps, 5))
    return ParameterSchedule.tied(values, tie_K=tie_K, tie_eps=tie_eps)


def write_fits(path, n_steps=16, dt=0.8):
    """Hand-written fits with small couplings on a short grid."""
    fits = {
        "K": FourierFit(a0=2.5e-3, a1=1e-3, b1=-4e-4, a2=2e-4, b2=1e-4,
                        omega=0.05, order=2),
        "eps": FourierFit(a0=1e-4, a1=5e-5, b1=2e-5, omega=0.03, order=1),
        "zeta": FourierFit(a0=1e-4, a1=-3e-5, b1=1e-5, omega=0.04, order=1),
    }
    FitsDAO(str(path)).save_fits(fits, TimeGrid(dt=dt, n_steps=n_steps))
    return fits


def random_qubit_state(rng, rank=2):
    g = rng.normal(size=(2, rank)) + 1j * rng.normal(size=(2, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
