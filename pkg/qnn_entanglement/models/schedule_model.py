import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import (
    HamiltonianParams, N_PARAMETERS, PARAMETER_NAMES
)

logger = logging.getLogger(__name__)

K_A, K_B, EPS_A, EPS_B, ZETA = range(N_PARAMETERS)

# Parameter functions that get their own Fourier fit
FUNCTION_NAMES = ("K", "eps", "zeta")
FUNCTION_COLUMNS = {"K": (K_A, K_B), "eps": (EPS_A, EPS_B), "zeta": (ZETA,)}


class ParameterSchedule:
    """Piecewise-constant values of (K_A, K_B, eps_A, eps_B, zeta) per step.

    With ``tie_K`` the K_B column is always an exact copy of K_A, and
    likewise for ``tie_eps``.
    """

    def __init__(self, values, tie_K: bool = True, tie_eps: bool = True):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != N_PARAMETERS:
            raise InvalidArgumentError(
                f"Schedule values must have shape (n_steps, {N_PARAMETERS}), "
                f"got {values.shape}"
            )
        if values.shape[0] < 1:
            raise InvalidArgumentError("Schedule needs at least one step")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Schedule values must be finite")
        self.tie_K = bool(tie_K)
        self.tie_eps = bool(tie_eps)
        if self.tie_K and not np.array_equal(values[:, K_A], values[:, K_B]):
            raise InvalidArgumentError("tie_K set but K_A and K_B differ")
        if self.tie_eps and not np.array_equal(values[:, EPS_A],
                                               values[:, EPS_B]):
            raise InvalidArgumentError(
                "tie_eps set but eps_A and eps_B differ")
        self.values = values

    @classmethod
    def tied(cls, values, tie_K: bool = True,
             tie_eps: bool = True) -> 'ParameterSchedule':
        """Build a schedule, copying the A columns onto tied B columns."""
        values = np.array(values, dtype=float)
        if values.ndim == 2 and values.shape[1] == N_PARAMETERS:
            if tie_K:
                values[:, K_B] = values[:, K_A]
            if tie_eps:
                values[:, EPS_B] = values[:, EPS_A]
        return cls(values, tie_K=tie_K, tie_eps=tie_eps)

    @classmethod
    def constant(cls, n_steps: int, k: float = 0.0, eps: float = 0.0,
                 zeta: float = 0.0, tie_K: bool = True,
                 tie_eps: bool = True) -> 'ParameterSchedule':
        row = np.array([k, k, eps, eps, zeta], dtype=float)
        return cls(np.tile(row, (n_steps, 1)), tie_K=tie_K, tie_eps=tie_eps)

    @classmethod
    def zeros(cls, n_steps: int) -> 'ParameterSchedule':
        return cls.constant(n_steps)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n_steps

    def column(self, name: str) -> np.ndarray:
        if name not in PARAMETER_NAMES:
            raise KeyError(f"Unknown schedule column '{name}'")
        return self.values[:, PARAMETER_NAMES.index(name)].copy()

    def params_at(self, step: int) -> HamiltonianParams:
        return HamiltonianParams.from_array(self.values[step])

    def with_values(self, values) -> 'ParameterSchedule':
        return ParameterSchedule.tied(values, tie_K=self.tie_K,
                                      tie_eps=self.tie_eps)

    def tie_gradient(self, gradient: np.ndarray) -> np.ndarray:
        """Sum the contributions of tied columns into both of them."""
        tied = np.array(gradient, dtype=float)
        if self.tie_K:
            total = tied[:, K_A] + tied[:, K_B]
            tied[:, K_A] = total
            tied[:, K_B] = total
        if self.tie_eps:
            total = tied[:, EPS_A] + tied[:, EPS_B]
            tied[:, EPS_A] = total
            tied[:, EPS_B] = total
        return tied

    def independent_columns(self) -> list:
        """Groups of columns that move together under the tie flags."""
        groups = [(K_A, K_B)] if self.tie_K else [(K_A,), (K_B,)]
        groups += [(EPS_A, EPS_B)] if self.tie_eps else [(EPS_A,), (EPS_B,)]
        groups.append((ZETA,))
        return groups

    def copy(self) -> 'ParameterSchedule':
        return ParameterSchedule(self.values.copy(), tie_K=self.tie_K,
                                 tie_eps=self.tie_eps)

    def __repr__(self) -> str:
        return (f"ParameterSchedule(n_steps={self.n_steps}, "
                f"tie_K={self.tie_K}, tie_eps={self.tie_eps})")


class FourierFit(BaseModel):
    """f(t) = a0 + a1 cos(wt) + b1 sin(wt) + a2 cos(2wt) + b2 sin(2wt)."""
    model_config = ConfigDict(extra="forbid")

    a0: float = Field(0.0, description="Constant term (rad/ns)")
    a1: float = Field(0.0, description="cos(wt) amplitude (rad/ns)")
    b1: float = Field(0.0, description="sin(wt) amplitude (rad/ns)")
    a2: float = Field(0.0, description="cos(2wt) amplitude (rad/ns)")
    b2: float = Field(0.0, description="sin(2wt) amplitude (rad/ns)")
    omega: float = Field(..., gt=0, description="Base angular frequency "
                                                "(rad/ns)")
    order: Literal[1, 2] = Field(2, description="Highest harmonic")
    rms_residual: float = Field(0.0, ge=0, description="RMS of fit - data")

    @model_validator(mode="after")
    def _second_harmonic_only_for_order_two(self) -> 'FourierFit':
        if self.order == 1 and (self.a2 != 0.0 or self.b2 != 0.0):
            raise ValueError("Order-1 fits must have a2 = b2 = 0")
        return self

    def amplitudes(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.b1, self.a2, self.b2])
