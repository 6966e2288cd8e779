"""Separable operations given as lists of product Kraus pairs (A_m, B_m)."""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from septrans import numerics, states
from septrans.logger import get_logger
from septrans.numerics import CMatrix, DEFAULT_TOL
from septrans.schemas.models import InputError
from septrans.states import BipartiteState, SupportProjectors

_logger = get_logger("sepops")

PROPORTIONALITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class KrausPair:
    A: CMatrix
    B: CMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", numerics.as_cmatrix(self.A, "A"))
        object.__setattr__(self, "B", numerics.as_cmatrix(self.B, "B"))

    def product(self) -> CMatrix:
        return np.kron(self.A, self.B)


@dataclass(frozen=True, eq=False)
class SeparableOperation:
    """
    Kraus pairs acting on H_A (x) H_B.

    Shapes are checked on construction; the closure condition is reported by
    ``validate_closure`` so that truncated or restricted operations can still
    be represented.
    """

    dA: int
    dB: int
    pairs: Tuple[KrausPair, ...]

    def __post_init__(self) -> None:
        pairs = tuple(
            pair if isinstance(pair, KrausPair) else KrausPair(*pair)
            for pair in self.pairs
        )
        if not pairs:
            raise InputError("A separable operation needs at least one Kraus pair")
        for index, pair in enumerate(pairs, start=1):
            if pair.A.shape != (self.dA, self.dA) or pair.B.shape != (self.dB, self.dB):
                raise InputError(
                    f"Kraus pair {index} has shapes {pair.A.shape} and {pair.B.shape}, "
                    f"expected ({self.dA}, {self.dA}) and ({self.dB}, {self.dB})"
                )
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def kraus_operators(self) -> List[CMatrix]:
        return [pair.product() for pair in self.pairs]


class ClosureReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid: bool
    residual: float


def validate_closure(op: SeparableOperation, tol: float = DEFAULT_TOL) -> ClosureReport:
    """Residual of sum_m A_m^dag A_m (x) B_m^dag B_m against I (x) I."""
    total = np.zeros((op.dA * op.dB, op.dA * op.dB), dtype=np.complex128)
    for pair in op.pairs:
        total += np.kron(
            numerics.dagger(pair.A) @ pair.A, numerics.dagger(pair.B) @ pair.B
        )
    residual = numerics.frobenius(total - np.eye(op.dA * op.dB))
    return ClosureReport(valid=residual <= tol, residual=residual)


def apply(op: SeparableOperation, rho, tol: float = DEFAULT_TOL) -> CMatrix:
    """Sum_m (A_m (x) B_m) rho (A_m (x) B_m)^dagger."""
    rho = states.validate_density_matrix(rho, op.dA * op.dB, tol)
    result = np.zeros_like(rho)
    for kraus in op.kraus_operators():
        result += kraus @ rho @ numerics.dagger(kraus)
    return result


@dataclass(frozen=True, eq=False)
class DeterministicCertificate:
    """Evidence that every branch maps psi to sqrt(p_m) exp(i theta_m) |phi>."""

    phi: BipartiteState
    probabilities: Tuple[float, ...]
    branch_phases: Tuple[float, ...]


@dataclass(frozen=True)
class NotDeterministic:
    """First branch (1-based label) whose output is not parallel to the reference."""

    witness_m: int
    residual: float


DeterminismResult = Union[DeterministicCertificate, NotDeterministic]


def check_deterministic(
    op: SeparableOperation, psi: BipartiteState, tol: float = DEFAULT_TOL
) -> DeterminismResult:
    """
    Decide whether ``op`` maps ``psi`` to a single pure state.

    The first branch with norm above ``tol`` fixes the reference |phi>; every
    other branch must equal it up to a phase, compared on the dual matrices.
    Branches annihilating psi enter the certificate with p_m = 0.
    """
    if (op.dA, op.dB) != psi.dims:
        raise InputError(f"Operation dims {(op.dA, op.dB)} do not match state {psi.dims}")

    outputs = [kraus @ psi.amplitudes for kraus in op.kraus_operators()]
    norms = [float(np.linalg.norm(vector)) for vector in outputs]

    reference = next((m for m, norm in enumerate(norms) if norm > tol), None)
    if reference is None:
        raise InputError("Every Kraus branch annihilates the input state")

    phi_vector = outputs[reference] / norms[reference]
    phi_dual = states.dual_matrix(phi_vector, op.dA, op.dB)

    probabilities: List[float] = []
    phases: List[float] = []
    for m, (vector, norm) in enumerate(zip(outputs, norms)):
        if norm <= tol:
            probabilities.append(0.0)
            phases.append(0.0)
            continue
        match = numerics.phase_align(
            states.dual_matrix(vector, op.dA, op.dB), norm * phi_dual, tol
        )
        if not match.matched:
            _logger.debug(f"Branch {m + 1} is not parallel (residual {match.residual:.3g})")
            return NotDeterministic(witness_m=m + 1, residual=match.residual / norm)
        probabilities.append(norm**2)
        phases.append(match.theta or 0.0)

    return DeterministicCertificate(
        phi=BipartiteState.normalized(op.dA, op.dB, phi_vector),
        probabilities=tuple(probabilities),
        branch_phases=tuple(phases),
    )


@dataclass(frozen=True, eq=False)
class RestrictedOperation:
    """Kraus pairs A_m P_A, B_m P_B together with the projectors used."""

    operation: SeparableOperation
    projectors: SupportProjectors

    def closure_residual(self) -> float:
        """Residual of the restricted closure against P_A (x) P_B."""
        op = self.operation
        total = sum(
            np.kron(numerics.dagger(pair.A) @ pair.A, numerics.dagger(pair.B) @ pair.B)
            for pair in op.pairs
        )
        target = np.kron(self.projectors.PA, self.projectors.PB)
        return numerics.frobenius(total - target)


def restrict_to_supports(
    op: SeparableOperation, psi: BipartiteState, cutoff: float = states.RANK_CUTOFF
) -> RestrictedOperation:
    projectors = states.supports(psi, cutoff)
    restricted = SeparableOperation(
        op.dA,
        op.dB,
        tuple(
            KrausPair(pair.A @ projectors.PA, pair.B @ projectors.PB)
            for pair in op.pairs
        ),
    )
    return RestrictedOperation(operation=restricted, projectors=projectors)


class PairProportionality(BaseModel):
    model_config = ConfigDict(frozen=True)

    unitary_proportional_A: bool
    scale_A: float
    unitary_proportional_B: bool
    scale_B: float

    @property
    def proportional(self) -> bool:
        return self.unitary_proportional_A and self.unitary_proportional_B


@dataclass(frozen=True, eq=False)
class ProportionalityCertificate:
    per_pair: Tuple[PairProportionality, ...]
    pairwise_factors: Optional[np.ndarray] = field(default=None)

    @property
    def all_proportional(self) -> bool:
        return all(pair.proportional for pair in self.per_pair)


def _isometry_scale(operator: CMatrix, support_basis: CMatrix, tol: float):
    """Is operator restricted to the support a multiple of an isometry?"""
    sigma = np.linalg.svd(operator @ support_basis, compute_uv=False)
    largest = float(sigma[0]) if sigma.size else 0.0
    if largest == 0.0:
        return True, 0.0
    proportional = float(sigma[0] - sigma[-1]) <= tol * max(1.0, largest)
    return proportional, float(np.sqrt(np.mean(sigma**2)))


def unitary_proportionality(
    op: SeparableOperation,
    psi: BipartiteState,
    tol: float = PROPORTIONALITY_TOL,
) -> ProportionalityCertificate:
    """
    Test each restricted A'_m and B'_m for being a multiple of a unitary.

    On the support of psi, A'_m^dagger A'_m must equal scale^2 times the
    identity, i.e. all singular values of A_m restricted to the support agree.
    """
    basis_a, basis_b = states.support_bases(psi)
    per_pair = []
    for pair in op.pairs:
        prop_a, scale_a = _isometry_scale(pair.A, basis_a, tol)
        prop_b, scale_b = _isometry_scale(pair.B, basis_b, tol)
        per_pair.append(
            PairProportionality(
                unitary_proportional_A=prop_a,
                scale_A=scale_a,
                unitary_proportional_B=prop_b,
                scale_B=scale_b,
            )
        )

    factors = None
    weights = np.array([(p.scale_A * p.scale_B) ** 2 for p in per_pair])
    if all(p.proportional for p in per_pair) and np.all(weights > 0):
        factors = weights[:, None] / weights[None, :]
    return ProportionalityCertificate(per_pair=tuple(per_pair), pairwise_factors=factors)


def construct_two_qubit_locc(
    lam: Sequence[float], mu: Sequence[float], tol: float = DEFAULT_TOL
) -> SeparableOperation:
    """
    Two-branch LOCC map from lam0|00> + lam1|11> to mu0|00> + mu1|11>.

    Branch 1 is (diag(a0, a1), I) with probability p; branch 2 is
    (X diag(b0, b1), X) with probability 1 - p, where
    p = (lam0^2 - mu1^2) / (mu0^2 - mu1^2).
    """
    if len(lam) != 2 or len(mu) != 2:
        raise InputError("Both spectra must have exactly two entries")
    l0, l1 = (float(v) for v in lam)
    m0, m1 = (float(v) for v in mu)
    if abs(l0**2 + l1**2 - 1.0) > tol or abs(m0**2 + m1**2 - 1.0) > tol:
        raise InputError("Spectra must be normalized (sum of squares = 1)")
    if l1 <= 0.0:
        raise InputError("The source state is a product state (lambda_1 = 0)")
    if l0 < l1 or m0 < m1 or min(l1, m1) < 0.0:
        raise InputError("Spectra must be sorted in descending order and nonnegative")

    if abs(l0 - m0) <= tol and abs(l1 - m1) <= tol:
        identity = np.eye(2, dtype=np.complex128)
        return SeparableOperation(2, 2, (KrausPair(identity, identity),))

    if not m0 > m1:
        raise InputError("The target spectrum must be non-degenerate")
    if m0 < l0 - tol:
        raise InputError(
            f"No LOCC map: target mu0 = {m0:.12g} is below source lambda0 = {l0:.12g}"
        )

    p = (l0**2 - m1**2) / (m0**2 - m1**2)
    p = min(max(p, 0.0), 1.0)
    a0, a1 = math.sqrt(p) * m0 / l0, math.sqrt(p) * m1 / l1
    b0, b1 = math.sqrt(1.0 - p) * m1 / l0, math.sqrt(1.0 - p) * m0 / l1

    first = KrausPair(np.diag([a0, a1]).astype(np.complex128), np.eye(2))
    second = KrausPair(numerics.PAULI_X @ np.diag([b0, b1]), numerics.PAULI_X)
    return SeparableOperation(2, 2, (first, second))
