import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.quantum_state import (
    IDENTITY_2, SIGMA_X, SIGMA_Z
)

PARAMETER_NAMES = ("K_A", "K_B", "eps_A", "eps_B", "zeta")
N_PARAMETERS = len(PARAMETER_NAMES)

# dH/dp for each column of a parameter schedule. The coupling enters twice
# because the pair sum over alpha != beta visits (A, B) and (B, A).
GENERATORS = np.array([
    np.kron(SIGMA_X, IDENTITY_2),
    np.kron(IDENTITY_2, SIGMA_X),
    np.kron(SIGMA_Z, IDENTITY_2),
    np.kron(IDENTITY_2, SIGMA_Z),
    2.0 * np.kron(SIGMA_Z, SIGMA_Z),
])

DEFAULT_DT_NS = 0.8
DEFAULT_N_STEPS = 317


@dataclass(frozen=True)
class HamiltonianParams:
    """Couplings in rad/ns (hbar = 1)."""
    k_a: float = 0.0
    k_b: float = 0.0
    eps_a: float = 0.0
    eps_b: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        for name, value in zip(PARAMETER_NAMES, self.as_array()):
            if not math.isfinite(value):
                raise InvalidArgumentError(
                    f"Hamiltonian parameter {name} must be finite, "
                    f"got {value!r}"
                )

    def as_array(self) -> np.ndarray:
        return np.array([self.k_a, self.k_b, self.eps_a, self.eps_b,
                         self.zeta], dtype=float)

    @classmethod
    def from_array(cls, values) -> 'HamiltonianParams':
        values = [float(v) for v in values]
        if len(values) != N_PARAMETERS:
            raise InvalidArgumentError(
                f"Expected {N_PARAMETERS} Hamiltonian parameters, "
                f"got {len(values)}"
            )
        return cls(*values)


class TimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(DEFAULT_DT_NS, gt=0, description="Timestep (ns)")
    n_steps: int = Field(DEFAULT_N_STEPS, ge=1,
                         description="Number of timesteps")

    @property
    def t_final(self) -> float:
        return self.dt * self.n_steps

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt
