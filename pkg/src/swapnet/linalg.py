"""Dense complex matrix kernels shared by every other module.

All state is stored as row-major complex128 ndarrays. The largest supported
system is 8 qubits (256x256), so everything stays dense.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

MAX_QUBITS = 8
MAX_DIM = 2**MAX_QUBITS

# Hermitian parts with |trace| below this are rejected instead of normalized.
TRACE_FLOOR = 1e-9


def as_square_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 matrix, raising on anything else."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def kron(a, b) -> np.ndarray:
    """Kronecker product a (x) b, capped at the maximum supported dimension."""
    a = as_square_matrix(a)
    b = as_square_matrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim > MAX_DIM:
        raise ValueError(
            f"kron result dimension {dim} exceeds the {MAX_QUBITS}-qubit cap ({MAX_DIM})"
        )
    return np.kron(a, b)


def commutator(h, rho) -> np.ndarray:
    """[h, rho] = h @ rho - rho @ h."""
    h = as_square_matrix(h)
    rho = as_square_matrix(rho)
    _check_same_dim(h, rho)
    return h @ rho - rho @ h


def frobenius_distance(a, b) -> float:
    """sqrt(sum |a_ij - b_ij|^2)."""
    a = as_square_matrix(a)
    b = as_square_matrix(b)
    _check_same_dim(a, b)
    return float(np.linalg.norm(a - b))


def hermitize_and_normalize(m) -> np.ndarray:
    """Hermitian part (m + m^dag)/2 scaled to unit trace.

    Raises ValueError when the Hermitian part's trace is within TRACE_FLOOR
    of zero, which signals a degenerate perturbation rather than anything
    resembling a density matrix.
    """
    m = as_square_matrix(m)
    herm = (m + m.conj().T) / 2
    tr = float(np.trace(herm).real)
    if abs(tr) < TRACE_FLOOR:
        raise ValueError(f"near-zero trace {tr:.3e}; refusing to normalize")
    return herm / tr


def matrix_exponential(m) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring Pade approximation.

    Serves as the independent oracle for the time-stepping integrator.
    """
    return scipy.linalg.expm(as_square_matrix(m))
