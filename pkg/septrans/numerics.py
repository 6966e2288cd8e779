"""Dense complex-matrix kernel shared by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. All functions are
pure: inputs are never modified and seeds are explicit arguments.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

from septrans.schemas.models import InputError

CMatrix = npt.NDArray[np.complex128]

DEFAULT_TOL = 1e-9

IDENTITY2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class PhaseMatch:
    """Result of comparing two operators up to a global phase."""

    matched: bool
    theta: Optional[float]
    residual: float


def as_cmatrix(matrix, name: str = "matrix") -> CMatrix:
    """Convert to a finite 2-D complex array or raise InputError."""
    array = np.array(matrix, dtype=np.complex128)
    if array.ndim != 2 or 0 in array.shape:
        raise InputError(f"{name} must be a non-empty 2-D matrix, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{name} contains non-finite entries")
    return array


def dagger(matrix: CMatrix) -> CMatrix:
    return np.conj(matrix).T


def frobenius(matrix) -> float:
    return float(np.linalg.norm(matrix))


def svd(matrix) -> Tuple[CMatrix, npt.NDArray[np.float64], CMatrix]:
    """Thin SVD ``M = U @ diag(sigma) @ Vdag`` with sigma in descending order."""
    m = as_cmatrix(matrix)
    u, sigma, vdag = np.linalg.svd(m, full_matrices=False)
    return u, sigma, vdag


def det(matrix) -> complex:
    m = as_cmatrix(matrix)
    if m.shape[0] != m.shape[1]:
        raise InputError(f"Determinant needs a square matrix, got shape {m.shape}")
    return complex(np.linalg.det(m))


def kron(a, b) -> CMatrix:
    """Kronecker product; row index a*dB + b matches the state layout."""
    return np.kron(as_cmatrix(a, "A"), as_cmatrix(b, "B"))


def phase_align(a, b, tol: float = DEFAULT_TOL) -> PhaseMatch:
    """
    Find the phase theta minimizing ||A - exp(i theta) B||_F.

    The optimal phase is arg(trace(B^dagger A)). A zero trace with nonzero
    operands is reported as unmatched.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise InputError(f"Shape mismatch in phase comparison: {a.shape} vs {b.shape}")

    norm_a = frobenius(a)
    norm_b = frobenius(b)
    if norm_a == 0.0 and norm_b == 0.0:
        return PhaseMatch(matched=True, theta=0.0, residual=0.0)

    overlap = complex(np.vdot(b, a))
    if overlap == 0:
        residual = math.sqrt(norm_a**2 + norm_b**2)
        return PhaseMatch(matched=False, theta=None, residual=residual)

    theta = math.atan2(overlap.imag, overlap.real) % (2.0 * math.pi)
    residual = frobenius(a - np.exp(1j * theta) * b)
    matched = residual <= tol * max(norm_a, norm_b)
    return PhaseMatch(matched=matched, theta=theta if matched else None, residual=residual)


def rng_for(seed: int) -> np.random.Generator:
    """Seeded generator; any 64-bit integer (signed or not) is accepted."""
    return np.random.default_rng(int(seed) % (1 << 64))


def complex_gaussian(rng: np.random.Generator, shape) -> CMatrix:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_matrix(rows: int, cols: int, seed: int) -> CMatrix:
    return complex_gaussian(rng_for(seed), (rows, cols))


def haar_unitary(d: int, seed: int) -> CMatrix:
    """Haar-random unitary from the QR factorization of a Ginibre matrix."""
    if d < 1:
        raise InputError(f"Unitary dimension must be positive, got {d}")
    z = complex_gaussian(rng_for(seed), (d, d))
    q, r = sla.qr(z)
    diagonal = np.diag(r)
    phases = diagonal / np.abs(diagonal)
    return q * phases


def unitarity_residual(matrix) -> float:
    m = np.asarray(matrix, dtype=np.complex128)
    return frobenius(dagger(m) @ m - np.eye(m.shape[1]))


def hermitian_residual(matrix) -> float:
    m = np.asarray(matrix, dtype=np.complex128)
    return frobenius(m - dagger(m))


def psd_eigenvalues(matrix) -> npt.NDArray[np.float64]:
    """Eigenvalues of the Hermitian part, ascending."""
    m = np.asarray(matrix, dtype=np.complex128)
    return np.linalg.eigvalsh((m + dagger(m)) / 2)


def numerical_rank(matrix, cutoff: float) -> int:
    """Number of singular values above ``cutoff`` times the largest one."""
    sigma = np.linalg.svd(np.asarray(matrix, dtype=np.complex128), compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > cutoff * sigma[0]))


def conjugation_superoperator(w, y) -> CMatrix:
    """Matrix of C -> W C Y acting on row-major vectorized C."""
    return np.kron(as_cmatrix(w, "W"), as_cmatrix(y, "Y").T)


def subspace_distance(basis_1, basis_2) -> float:
    """Frobenius distance between orthogonal projectors onto two column spans."""
    q1 = sla.orth(np.asarray(basis_1, dtype=np.complex128))
    q2 = sla.orth(np.asarray(basis_2, dtype=np.complex128))
    return frobenius(q1 @ dagger(q1) - q2 @ dagger(q2))
