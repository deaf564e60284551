"""Dense complex linear algebra for small multi-qubit operators.

Matrices are plain ``numpy`` arrays of dtype complex128. Qubit 0 is the most
significant bit of the computational-basis index throughout the package.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-8

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class HermitianEig(NamedTuple):
    """Eigenvalues sorted in descending order and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    m = np.asarray(getattr(a, "matrix", a), dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(rho, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` on ``n_qubits`` qubits to the qubits listed in ``keep``.

    The kept qubits appear in ascending index order in the result.
    """
    rho = as_matrix(rho)
    dim = 1 << n_qubits
    if rho.shape != (dim, dim):
        n_qubits_of(rho.shape[0])
        raise ValueError(f"rho has shape {rho.shape}, expected {(dim, dim)} for {n_qubits} qubits")
    keep = sorted(int(k) for k in keep)
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if len(set(keep)) != len(keep):
        raise ValueError(f"duplicate qubit index in {keep}")
    if keep[0] < 0 or keep[-1] >= n_qubits:
        raise IndexError(f"qubit index out of range for {n_qubits} qubits: {keep}")

    traced = [q for q in range(n_qubits) if q not in keep]
    t = rho.reshape((2,) * (2 * n_qubits))
    row = keep + traced
    col = [q + n_qubits for q in keep] + [q + n_qubits for q in traced]
    t = t.transpose(row + col)
    k, r = 1 << len(keep), 1 << len(traced)
    t = t.reshape(k, r, k, r)
    return np.einsum("ajbj->ab", t)


def permute_qubits(rho, n_qubits: int, order: Sequence[int]) -> np.ndarray:
    """Reorder qubits so that new qubit ``i`` is old qubit ``order[i]``."""
    rho = as_matrix(rho)
    order = list(order)
    if sorted(order) != list(range(n_qubits)):
        raise ValueError(f"{order} is not a permutation of {n_qubits} qubits")
    t = rho.reshape((2,) * (2 * n_qubits))
    t = t.transpose(order + [q + n_qubits for q in order])
    return t.reshape(rho.shape)


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"matrix is not square: {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3g}")
    return a


def herm_eig(a) -> HermitianEig:
    a = check_hermitian(a)
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    return HermitianEig(w[::-1].copy(), v[:, ::-1].copy())


def clamp_spectrum(w: np.ndarray, tol: float = NEGATIVE_EIG_TOL) -> np.ndarray:
    if w.size and w.min() < -tol:
        raise NotPSDError(f"eigenvalue {w.min():.3g} below -{tol:g}")
    return np.where(w < 0.0, 0.0, w)


def psd_sqrt(a) -> np.ndarray:
    w, v = herm_eig(a)
    w = clamp_spectrum(w)
    return (v * np.sqrt(w)) @ v.conj().T


def spin_flip(rho) -> np.ndarray:
    """Return (sigma_y x sigma_y) rho* (sigma_y x sigma_y) for a two-qubit operator."""
    rho = as_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"spin flip needs a 4x4 matrix, got {rho.shape}")
    return SIGMA_YY @ rho.conj() @ SIGMA_YY
