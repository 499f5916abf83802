import logging
import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from qnn_entanglement.exceptions import InvalidArgumentError
from qnn_entanglement.models.hamiltonian_model import TimeGrid
from qnn_entanglement.models.noise_model import NoiseSpec
from qnn_entanglement.models.quantum_state import PureState

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 5e-5
DEFAULT_MAX_EPOCHS = 500
DEFAULT_STOP_RMS = 1e-3


class TrainingSample:

    def __init__(self, initial: PureState, target: float, name: str = ""):
        if not isinstance(initial, PureState):
            raise InvalidArgumentError("Training inputs must be pure states")
        target = float(target)
        if not math.isfinite(target) or target < 0.0 or target > 1.0:
            raise InvalidArgumentError(
                f"Training target must lie in [0, 1], got {target!r}"
            )
        self.initial = initial
        self.target = target
        self.name = name

    def __repr__(self) -> str:
        return f"TrainingSample(name={self.name!r}, target={self.target})"


class InitSpec(BaseModel):
    """Constant starting schedule with multiplicative uniform jitter."""
    model_config = ConfigDict(extra="forbid")

    k: float = Field(2.5e-3, description="Initial tunneling (rad/ns)")
    eps: float = Field(1e-4, description="Initial bias (rad/ns)")
    zeta: float = Field(1e-4, description="Initial coupling (rad/ns)")
    jitter: float = Field(0.1, ge=0, lt=1,
                          description="Relative uniform jitter half-width")


class FourierOrders(BaseModel):
    model_config = ConfigDict(extra="forbid")

    K: Literal[1, 2] = 2
    eps: Literal[1, 2] = 1
    zeta: Literal[1, 2] = 1
    n_candidates: int = Field(2000, ge=10,
                              description="Frequencies in the coarse scan")

    def order_for(self, function_name: str) -> int:
        return getattr(self, function_name)


class TrainingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: Union[float, Literal["auto"]] = Field(
        DEFAULT_LEARNING_RATE,
        description="Gradient-descent step, or 'auto' for a coarse sweep"
    )
    max_epochs: int = Field(DEFAULT_MAX_EPOCHS, ge=1)
    stop_rms: float = Field(DEFAULT_STOP_RMS, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64,
                      description="Master seed for initialization jitter")
    grid: TimeGrid = Field(default_factory=TimeGrid)
    tie_K: bool = True
    tie_eps: bool = True
    init: InitSpec = Field(default_factory=InitSpec)
    noise: Optional[NoiseSpec] = None
    fourier: FourierOrders = Field(default_factory=FourierOrders)

    @field_validator("learning_rate")
    @classmethod
    def _positive_rate(cls, value):
        if value != "auto" and not (math.isfinite(value) and value > 0):
            raise ValueError("learning_rate must be > 0 or 'auto'")
        return value


class EpochRecord(BaseModel):
    epoch: int = Field(..., ge=0)
    rms_error: float = Field(..., ge=0)
    per_sample_outputs: List[float] = Field(...)

    @staticmethod
    def rms_of(outputs, targets) -> float:
        errors = [(o - t) ** 2 for o, t in zip(outputs, targets)]
        return math.sqrt(sum(errors) / len(errors))


class EntanglementReport(BaseModel):
    concurrence: float = Field(..., ge=0, le=1)
    eof: float = Field(..., ge=0, le=1, description="Entanglement of "
                                                     "formation (ebits)")


class SweepResult(BaseModel):
    family: str
    parameter: float = Field(..., description="gamma, delta or noise level")
    test_amplitude: float = Field(0.0, ge=0)
    qnn_output: float = Field(..., ge=0, le=1)
    qnn_stderr: float = Field(0.0, ge=0)
    eof_clean: float = Field(..., ge=0, le=1)
    eof_noisy_mean: float = Field(..., ge=0, le=1)
    eof_noisy_stderr: float = Field(0.0, ge=0)
    n_seeds: int = Field(1, ge=1)
