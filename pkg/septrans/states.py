"""Bipartite pure states, Schmidt decomposition, supports and map-state duality.

Amplitudes use the layout index ``a * dB + b``. The dual operator of a ket is
the ``dA x dB`` matrix with entry ``(a, b)`` equal to that amplitude, so all
transposes are taken in the computational basis of H_B.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from septrans import numerics
from septrans.numerics import CMatrix
from septrans.schemas.models import InputError

NORM_TOL = 1e-9
RANK_CUTOFF = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Normalized pure state on a dA x dB tensor-product space."""

    dA: int
    dB: int
    amplitudes: CMatrix = field(repr=False)

    def __post_init__(self) -> None:
        if self.dA < 1 or self.dB < 1:
            raise InputError(f"Dimensions must be positive, got {self.dA}x{self.dB}")
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amplitudes.size != self.dA * self.dB:
            raise InputError(
                f"Expected {self.dA * self.dB} amplitudes, got {amplitudes.size}"
            )
        if not np.all(np.isfinite(amplitudes)):
            raise InputError("Amplitudes must be finite")
        norm = float(np.linalg.norm(amplitudes))
        if norm == 0.0:
            raise InputError("The zero vector is not a state")
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"State is not normalized (norm = {norm:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @classmethod
    def normalized(cls, dA: int, dB: int, vector) -> "BipartiteState":
        """Build a state from an unnormalized vector, scaling it explicitly."""
        vector = np.asarray(vector, dtype=np.complex128).ravel()
        norm = float(np.linalg.norm(vector))
        if norm == 0.0 or not np.isfinite(norm):
            raise InputError("Cannot normalize a zero or non-finite vector")
        return cls(dA, dB, vector / norm)

    @property
    def dims(self):
        return (self.dA, self.dB)

    def density(self) -> CMatrix:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))

    def overlap(self, other: "BipartiteState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "BipartiteState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Descending Schmidt coefficients with local bases as columns."""

    coefficients: npt.NDArray[np.float64]
    basis_a: CMatrix
    basis_b: CMatrix
    rank: int

    def reconstruct(self) -> CMatrix:
        """Sum of lambda_j |a_j> (x) |b_j> as an amplitude vector."""
        d_a = self.basis_a.shape[0]
        d_b = self.basis_b.shape[0]
        vector = np.zeros(d_a * d_b, dtype=np.complex128)
        for j, coefficient in enumerate(self.coefficients):
            vector += coefficient * np.kron(self.basis_a[:, j], self.basis_b[:, j])
        return vector


@dataclass(frozen=True, eq=False)
class SupportProjectors:
    PA: CMatrix
    PB: CMatrix
    rank: int


@dataclass(frozen=True, eq=False)
class DualOperator:
    """The map chi: H_B -> H_A dual to a ket, as a dA x dB matrix."""

    matrix: CMatrix

    def rank(self, cutoff: float = RANK_CUTOFF) -> int:
        return numerics.numerical_rank(self.matrix, cutoff)


def dual_matrix(vector, dA: int, dB: int) -> CMatrix:
    """Re-index an (unnormalized) amplitude vector as a dA x dB matrix."""
    return np.asarray(vector, dtype=np.complex128).reshape(dA, dB)


def to_dual(psi: BipartiteState) -> DualOperator:
    return DualOperator(dual_matrix(psi.amplitudes, psi.dA, psi.dB))


def from_dual(chi: DualOperator) -> BipartiteState:
    matrix = np.asarray(chi.matrix, dtype=np.complex128)
    if matrix.ndim != 2:
        raise InputError(f"Dual operator must be a matrix, got shape {matrix.shape}")
    d_a, d_b = matrix.shape
    return BipartiteState(d_a, d_b, matrix.ravel())


def schmidt_decompose(
    psi: BipartiteState, cutoff: float = RANK_CUTOFF
) -> SchmidtDecomposition:
    """
    Schmidt decomposition via the SVD of the dual operator.

    With chi = U diag(s) V^dagger the local B-basis vectors are the rows of
    V^dagger, so that |psi> = sum_j s_j U[:, j] (x) Vdag[j, :].
    """
    u, sigma, vdag = numerics.svd(to_dual(psi).matrix)
    if sigma[0] == 0.0:
        raise InputError("Cannot decompose the zero vector")
    rank = int(np.count_nonzero(sigma > cutoff * sigma[0]))
    return SchmidtDecomposition(
        coefficients=_frozen(sigma),
        basis_a=_frozen(u),
        basis_b=_frozen(vdag.T),
        rank=rank,
    )


def supports(psi: BipartiteState, cutoff: float = RANK_CUTOFF) -> SupportProjectors:
    """Projectors onto the local supports (Schmidt vectors with positive weight)."""
    decomposition = schmidt_decompose(psi, cutoff)
    r = decomposition.rank
    basis_a = decomposition.basis_a[:, :r]
    basis_b = decomposition.basis_b[:, :r]
    return SupportProjectors(
        PA=_frozen(basis_a @ numerics.dagger(basis_a)),
        PB=_frozen(basis_b @ numerics.dagger(basis_b)),
        rank=r,
    )


def support_bases(psi: BipartiteState, cutoff: float = RANK_CUTOFF):
    """Orthonormal column bases of the A and B supports."""
    decomposition = schmidt_decompose(psi, cutoff)
    r = decomposition.rank
    return decomposition.basis_a[:, :r], decomposition.basis_b[:, :r]


def random_state(dA: int, dB: int, seed: int) -> BipartiteState:
    """Seeded Gaussian state with full Schmidt rank (redrawn if deficient)."""
    if dA < 1 or dB < 1:
        raise InputError(f"Dimensions must be positive, got {dA}x{dB}")
    rng = numerics.rng_for(seed)
    full_rank = min(dA, dB)
    while True:
        vector = numerics.complex_gaussian(rng, dA * dB)
        state = BipartiteState.normalized(dA, dB, vector)
        if schmidt_decompose(state).rank == full_rank:
            return state


def from_schmidt_coefficients(
    values: Sequence[float], dA: int, dB: int
) -> BipartiteState:
    """The state sum_j values[j] |j>|j> in the computational basis."""
    values = np.asarray(values, dtype=np.float64)
    if values.size > min(dA, dB):
        raise InputError(
            f"{values.size} coefficients do not fit in a {dA}x{dB} space"
        )
    vector = np.zeros(dA * dB, dtype=np.complex128)
    for j, value in enumerate(values):
        vector[j * dB + j] = value
    return BipartiteState(dA, dB, vector)


def apply_local(psi: BipartiteState, a, b) -> CMatrix:
    """(A (x) B)|psi> as a raw amplitude vector."""
    return numerics.kron(a, b) @ psi.amplitudes


def validate_density_matrix(rho, dim: int, tol: float = numerics.DEFAULT_TOL) -> CMatrix:
    """Return rho as an array if it is Hermitian, PSD and of unit trace."""
    rho = numerics.as_cmatrix(rho, "density matrix")
    if rho.shape != (dim, dim):
        raise InputError(f"Density matrix must be {dim}x{dim}, got {rho.shape}")
    if numerics.hermitian_residual(rho) > tol * max(1.0, numerics.frobenius(rho)):
        raise InputError("Density matrix is not Hermitian")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > tol:
        raise InputError(f"Density matrix trace is {trace.real:.12g}, expected 1")
    if numerics.psd_eigenvalues(rho)[0] < -tol:
        raise InputError("Density matrix is not positive semidefinite")
    return rho


def partial_transpose(rho, dA: int, dB: int) -> CMatrix:
    """Transpose on the B factor."""
    tensor = np.asarray(rho, dtype=np.complex128).reshape(dA, dB, dA, dB)
    return tensor.transpose(0, 3, 2, 1).reshape(dA * dB, dA * dB)


def is_ppt(rho, dA: int, dB: int, floor: float = -1e-9) -> bool:
    return bool(numerics.psd_eigenvalues(partial_transpose(rho, dA, dB))[0] >= floor)
