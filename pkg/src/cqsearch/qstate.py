"""State containers and the array kernels every engine is built on.

Basis ordering across blocks is big-endian: for two blocks of size ``N`` the
joint index of ``|a>|b>`` is ``a * N + b``.  ``tensor`` and every reshape in
the package follow this convention, so ``amps.reshape(N, N)[a, b]`` is the
amplitude of ``|a>|b>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Size caps, kept as module constants so experiments can raise them.
STATEVECTOR_MAX_DIM = 2**26
DENSITY_MAX_DIM = 4096

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
IMAG_TOL = 1e-10


class CapExceededError(ValueError):
    """Requested dimension is above the configured size cap."""


def is_power_of_two(dim: int) -> bool:
    return dim >= 2 and (dim & (dim - 1)) == 0


def check_statevector_dim(dim: int) -> None:
    if dim > STATEVECTOR_MAX_DIM:
        raise CapExceededError(f"statevector dim {dim} exceeds cap {STATEVECTOR_MAX_DIM}")


def check_density_dim(dim: int) -> None:
    if dim > DENSITY_MAX_DIM:
        raise CapExceededError(f"density-matrix dim {dim} exceeds cap {DENSITY_MAX_DIM}")


def check_index(index: int, dim: int) -> int:
    index = int(index)
    if not 0 <= index < dim:
        raise IndexError(f"basis index {index} out of range for dim {dim}")
    return index


# -- kernels ---------------------------------------------------------------
# Both kernels act on every 1-D slice of ``arr`` along ``axis`` and return a
# new array.  Applying a kernel along axis 0 and then axis 1 of a matrix
# conjugates it by the (real, symmetric) operator the kernel implements.

def phase_flip(arr: np.ndarray, index: int, axis: int = 0) -> np.ndarray:
    """``I - 2|index><index|`` along ``axis``."""
    out = np.array(arr, dtype=complex, copy=True)
    sl = [slice(None)] * out.ndim
    sl[axis] = index
    out[tuple(sl)] *= -1
    return out


def invert_about_mean(arr: np.ndarray, axis: int = 0) -> np.ndarray:
    """``2|s><s| - I`` along ``axis``, i.e. ``a -> 2*mean - a``."""
    arr = np.asarray(arr, dtype=complex)
    return 2.0 * arr.mean(axis=axis, keepdims=True) - arr


# -- containers ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StateVector:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if not is_power_of_two(amps.size):
            raise ValueError(f"dimension {amps.size} is not a power of two >= 2")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    def __len__(self):
        return self.dim

    def __getitem__(self, index):
        return self.amps[index]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        check_density_dim(rho.shape[0])
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityMatrix":
        return cls(np.outer(state.amps, state.amps.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        check_density_dim(dim)
        return cls(np.eye(dim, dtype=complex) / dim)


# -- operations ------------------------------------------------------------

def new_basis_state(dim: int, index: int) -> StateVector:
    if not is_power_of_two(dim):
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    check_statevector_dim(dim)
    index = check_index(index, dim)
    amps = np.zeros(dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugating the left argument."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    dim = a.dim * b.dim
    check_statevector_dim(dim)
    return StateVector(np.kron(a.amps, b.amps))


def projector_probability(rho: DensityMatrix, target: int) -> float:
    """``Tr[|t><t| rho]``; the diagonal entry at ``target``."""
    target = check_index(target, rho.dim)
    value = rho.entries[target, target]
    if abs(value.imag) >= IMAG_TOL:
        raise ValueError(f"diagonal entry {target} has imaginary part {value.imag!r}")
    return float(value.real)
