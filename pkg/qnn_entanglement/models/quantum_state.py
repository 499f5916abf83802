"""Two-qubit states in the charge basis (00, 01, 10, 11), qubit A on the left."""
import logging
from typing import Dict, Iterator, List, Sequence, Union

import numpy as np

from qnn_entanglement.exceptions import InvalidStateError

logger = logging.getLogger(__name__)

DIM = 4
BASIS_LABELS = ("00", "01", "10", "11")

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
NORM_TOL = 1e-12

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_ZZ = np.kron(SIGMA_Z, SIGMA_Z)
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

# Table of the training/test states used throughout the experiments.
NAMED_STATE_AMPLITUDES: Dict[str, Sequence[complex]] = {
    "bell": (1.0, 0.0, 0.0, 1.0),
    "flat": (1.0, 1.0, 1.0, 1.0),
    "c": (0.0, 0.0, 0.5, 1.0),
    "p": (1.0, 1.0, 1.0, 0.0),
}


def _encode_complex(values: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in values]


def _decode_complex(pairs) -> np.ndarray:
    try:
        arr = np.asarray(pairs, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidStateError(f"Malformed [re, im] pair list: {e}")
    if arr.shape[-1] != 2:
        raise InvalidStateError(
            f"Expected [re, im] pairs, got trailing dimension {arr.shape[-1]}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


class PureState:

    def __init__(self, amplitudes, validate: bool = True):
        self.amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        if validate:
            self._validate()

    def _validate(self) -> None:
        if self.amplitudes.shape != (DIM,):
            raise InvalidStateError(
                f"Pure state needs {DIM} amplitudes, "
                f"got {self.amplitudes.shape[0]}"
            )
        if not np.all(np.isfinite(self.amplitudes)):
            raise InvalidStateError("Pure state amplitudes must be finite")
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(
                f"Pure state is not normalized (sum |c|^2 = {norm!r})"
            )

    @classmethod
    def normalized(cls, values) -> 'PureState':
        vec = np.array(values, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm == 0.0:
            raise InvalidStateError("Cannot normalize a zero or non-finite "
                                    "vector")
        return cls(vec / norm)

    @classmethod
    def named(cls, name: str) -> 'PureState':
        key = name.lower()
        if key not in NAMED_STATE_AMPLITUDES:
            raise KeyError(f"Unknown named state '{name}'")
        return cls.normalized(NAMED_STATE_AMPLITUDES[key])

    def to_density_matrix(self) -> 'DensityMatrix':
        return DensityMatrix(np.outer(self.amplitudes,
                                      self.amplitudes.conj()))

    def to_dict(self) -> dict:
        return {'amplitudes': _encode_complex(self.amplitudes)}

    @classmethod
    def from_dict(cls, data: dict) -> 'PureState':
        return cls(_decode_complex(data['amplitudes']))

    def __repr__(self) -> str:
        return f"PureState({np.array2string(self.amplitudes, precision=4)})"


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace 4x4 matrix.

    Construction checks every invariant unless ``validate=False``; the
    propagator uses the unchecked path for states it built itself.
    """

    def __init__(self, elements, validate: bool = True):
        self.elements = np.array(elements, dtype=complex)
        if validate:
            self._validate()

    def _validate(self) -> None:
        m = self.elements
        if m.shape != (DIM, DIM):
            raise InvalidStateError(
                f"Density matrix must be {DIM}x{DIM}, got {m.shape}"
            )
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("Density matrix has non-finite entries")
        herm_err = float(np.max(np.abs(m - m.conj().T)))
        if herm_err > HERMITIAN_TOL:
            raise InvalidStateError(
                f"Density matrix is not Hermitian (max deviation {herm_err:.3e})"
            )
        trace = np.trace(m)
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidStateError(
                f"Density matrix trace is {trace.real!r}, expected 1"
            )
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if min_eig < -PSD_TOL:
            raise InvalidStateError(
                f"Density matrix is not positive semidefinite "
                f"(min eigenvalue {min_eig:.3e})"
            )

    @classmethod
    def from_pure(cls, state: PureState) -> 'DensityMatrix':
        return state.to_density_matrix()

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()

    def copy(self) -> 'DensityMatrix':
        return DensityMatrix(self.elements.copy(), validate=False)

    def to_dict(self) -> dict:
        return {
            'basis': list(BASIS_LABELS),
            'elements': [_encode_complex(row) for row in self.elements],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'DensityMatrix':
        values = _decode_complex(data['elements'])
        if values.size != DIM * DIM:
            raise InvalidStateError(
                f"Expected {DIM * DIM} matrix elements, got {values.size}"
            )
        # Rows may be nested or flattened; both are row-major
        return cls(values.reshape(DIM, DIM))

    def __repr__(self) -> str:
        return f"DensityMatrix(trace={self.trace:.6f}, purity={self.purity():.6f})"


StateLike = Union[PureState, DensityMatrix]


def as_density_matrix(state: StateLike) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.to_density_matrix()
    raise TypeError(f"Expected PureState or DensityMatrix, got {type(state)}")


class Trajectory:
    """Density matrices at every grid point, rho(0) through rho(t_f)."""

    def __init__(self, states: np.ndarray):
        self.states = states

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, index: int) -> DensityMatrix:
        return DensityMatrix(self.states[index], validate=False)

    def __iter__(self) -> Iterator[DensityMatrix]:
        for k in range(len(self)):
            yield self[k]

    @property
    def final(self) -> DensityMatrix:
        return self[-1]

    def traces(self) -> np.ndarray:
        return np.real(np.trace(self.states, axis1=1, axis2=2))

    def purities(self) -> np.ndarray:
        return np.real(np.einsum('kij,kji->k', self.states, self.states))

    def as_list(self) -> List[DensityMatrix]:
        return list(self)
