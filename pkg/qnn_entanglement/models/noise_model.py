from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class NoiseKind(str, Enum):
    MAGNITUDE = "magnitude"
    PHASE = "phase"
    COMPLEX = "complex"


class NoiseDistribution(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


# Amplitudes named in the noise study (training and test levels).
NOISE_AMPLITUDE_LADDER = (0.0, 0.0069, 0.0089, 0.013, 0.014)
BW_REFERENCE_AMPLITUDE = 0.0069


class NoiseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: NoiseKind = Field(..., description="Perturbation channel")
    amplitude: float = Field(
        ..., ge=0,
        description="RMS size per element and timestep (radians for phase)"
    )
    seed: int = Field(0, ge=0, lt=2 ** 64, description="RNG seed")
    distribution: NoiseDistribution = Field(
        NoiseDistribution.GAUSSIAN,
        description="Draw family; uniform is scaled to the same rms"
    )

    @property
    def is_identity(self) -> bool:
        return self.amplitude == 0.0

    def with_seed(self, seed: int) -> 'NoiseSpec':
        return self.model_copy(update={"seed": int(seed)})

    def with_amplitude(self, amplitude: float) -> 'NoiseSpec':
        return NoiseSpec(kind=self.kind, amplitude=amplitude, seed=self.seed,
                         distribution=self.distribution)
