"""Dense complex linear algebra on plain numpy arrays.

Matrices are square ``complex128`` arrays and states are 1-D ``complex128``
arrays.  Qubit 0 is the leftmost tensor factor, i.e. the most significant bit
of a basis index; every module follows this ordering.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, UnitarityError

ATOL = 1e-10


def as_matrix(a, *, unitary: bool = False, atol: float = ATOL) -> np.ndarray:
    """Coerce ``a`` to a square complex matrix, optionally asserting unitarity."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    if unitary and not is_unitary(m, atol):
        raise UnitarityError(f"matrix is not unitary within {atol:g}")
    return m


def as_state(psi, *, normalized: bool = True, atol: float = ATOL) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"expected a non-empty state vector, got shape {v.shape}")
    if normalized and abs(np.linalg.norm(v) - 1.0) > atol:
        raise ValueError("state vector is not normalized")
    return v


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128)


def basis_state(d: int, index: int) -> np.ndarray:
    if not 0 <= index < d:
        raise IndexError(f"basis index {index} out of range for dimension {d}")
    v = np.zeros(d, dtype=np.complex128)
    v[index] = 1.0
    return v


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def is_unitary(m, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= atol)


def is_hermitian(m, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def num_qubits_of(d: int) -> int:
    n = int(d).bit_length() - 1
    if d < 1 or 1 << n != d:
        raise DimensionError(f"dimension {d} is not a power of two")
    return n
