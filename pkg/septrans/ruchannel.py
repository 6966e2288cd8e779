"""Separable random unitary channels and deterministic maps of state collections.

A channel is rho -> sum_m p_m (U_m (x) V_m) rho (U_m (x) V_m)^dagger on two
factor spaces of equal dimension d. Dual matrices follow ``states.to_dual``;
V-bar denotes the transpose of V in the computational basis.
"""

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from septrans import numerics, sepops, states
from septrans.logger import get_logger, log_step
from septrans.numerics import CMatrix, DEFAULT_TOL
from septrans.schemas.models import InconsistencyError, InputError
from septrans.states import BipartiteState

_logger = get_logger("ruchannel")

EIGENVALUE_CLUSTER_TOL = 1e-8
# a grid entry must miss by this many tolerances before results are declared inconsistent
CONSISTENCY_SLACK = 100.0
MEMBER_RANK_SEED = 0x5EED
EXAMPLE_SAMPLES = 64
# members of each sign family joining the fixed point in the joint collection check
JOINT_MEMBERS_PER_FAMILY = 2


@dataclass(frozen=True, eq=False)
class UnitaryTerm:
    p: float
    U: CMatrix
    V: CMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "U", numerics.as_cmatrix(self.U, "U"))
        object.__setattr__(self, "V", numerics.as_cmatrix(self.V, "V"))

    @property
    def v_bar(self) -> CMatrix:
        return self.V.T


@dataclass(frozen=True, eq=False)
class RandomUnitaryChannel:
    d: int
    terms: Tuple[UnitaryTerm, ...]

    def __post_init__(self) -> None:
        terms = tuple(
            term if isinstance(term, UnitaryTerm) else UnitaryTerm(*term)
            for term in self.terms
        )
        if not terms:
            raise InputError("A random unitary channel needs at least one term")
        for index, term in enumerate(terms, start=1):
            if term.U.shape != (self.d, self.d) or term.V.shape != (self.d, self.d):
                raise InputError(f"Term {index} is not {self.d}x{self.d}")
        object.__setattr__(self, "terms", terms)

    def __len__(self) -> int:
        return len(self.terms)

    def as_separable_operation(self) -> sepops.SeparableOperation:
        """Kraus pairs (sqrt(p_m) U_m, V_m)."""
        return sepops.SeparableOperation(
            self.d,
            self.d,
            tuple(
                sepops.KrausPair(math.sqrt(max(term.p, 0.0)) * term.U, term.V)
                for term in self.terms
            ),
        )


class ChannelValidation(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid: bool
    probability_residual: float
    unitarity_residuals: List[float]
    closure_residual: float
    positive_probabilities: bool


def validate_channel(
    ch: RandomUnitaryChannel, tol: float = DEFAULT_TOL
) -> ChannelValidation:
    """Probability sum, unitarity of every U_m and V_m, and Kraus closure."""
    probability_residual = abs(sum(term.p for term in ch.terms) - 1.0)
    unitarity = [
        max(numerics.unitarity_residual(term.U), numerics.unitarity_residual(term.V))
        for term in ch.terms
    ]
    positive = all(term.p > 0.0 for term in ch.terms)
    closure = sepops.validate_closure(ch.as_separable_operation(), tol)
    valid = (
        positive
        and probability_residual <= tol
        and all(r <= tol for r in unitarity)
        and closure.valid
    )
    return ChannelValidation(
        valid=valid,
        probability_residual=probability_residual,
        unitarity_residuals=unitarity,
        closure_residual=closure.residual,
        positive_probabilities=positive,
    )


def two_qubit_example_channel(p: float) -> RandomUnitaryChannel:
    """rho -> p rho + (1 - p) (X (x) Z) rho (X (x) Z)."""
    return RandomUnitaryChannel(
        2,
        (
            UnitaryTerm(p, numerics.IDENTITY2, numerics.IDENTITY2),
            UnitaryTerm(1.0 - p, numerics.PAULI_X, numerics.PAULI_Z),
        ),
    )


def fixed_point_state() -> BipartiteState:
    """(|+>|0> + |->|1>) / sqrt(2)."""
    return BipartiteState(2, 2, np.array([1, 1, 1, -1], dtype=np.complex128) / 2)


def example_family_state(a: complex, b: complex, sign: int) -> BipartiteState:
    """a|00> + b|01> + sign*a|10> - sign*b|11>, normalized."""
    if sign not in (1, -1):
        raise InputError(f"Sign must be +1 or -1, got {sign}")
    return BipartiteState.normalized(2, 2, [a, b, sign * a, -sign * b])


def random_local_unitary_channel(d: int, n_terms: int, seed: int) -> RandomUnitaryChannel:
    """Haar-random local unitaries with Dirichlet-distributed weights."""
    if n_terms < 1:
        raise InputError("A channel needs at least one term")
    rng = numerics.rng_for(seed)
    weights = rng.dirichlet(np.ones(n_terms))
    seeds = rng.integers(0, 2**63 - 1, size=2 * n_terms)
    terms = tuple(
        UnitaryTerm(
            float(weights[m]),
            numerics.haar_unitary(d, int(seeds[2 * m])),
            numerics.haar_unitary(d, int(seeds[2 * m + 1])),
        )
        for m in range(n_terms)
    )
    return RandomUnitaryChannel(d, terms)


@dataclass(frozen=True, eq=False)
class StateOutcome:
    deterministic: bool
    phi: Optional[BipartiteState] = None
    certificate: Optional[sepops.DeterministicCertificate] = None


GridKey = Tuple[str, int, int, int, int]


@dataclass(frozen=True, eq=False)
class CollectionReport:
    """
    Pair conditions over all (m, n, j, k) plus per-state determinism.

    ``phase_table`` maps ("A" | "B", m, n, j, k), 1-based, to the phase
    realizing the dot-equality, or None where it fails.
    """

    pair_condition_A: bool
    pair_condition_B: bool
    reduced_condition_A: bool
    reduced_condition_B: bool
    per_state: Tuple[StateOutcome, ...]
    phase_table: Dict[GridKey, Optional[float]] = field(repr=False)
    worst_residual: float = 0.0

    @property
    def all_deterministic(self) -> bool:
        return all(outcome.deterministic for outcome in self.per_state)

    def failures(self, side: str) -> List[GridKey]:
        return sorted(
            key for key, theta in self.phase_table.items() if key[0] == side and theta is None
        )


def _condition_grid(
    side: str,
    generators: Dict[Tuple[int, int], CMatrix],
    products: Dict[Tuple[int, int], CMatrix],
    tol: float,
):
    """Evaluate W X =. X W for every generator W and product X."""
    phases: Dict[GridKey, Optional[float]] = {}
    residuals: Dict[GridKey, float] = {}
    for (m, n), w in generators.items():
        for (j, k), x in products.items():
            key = (side, m, n, j, k)
            match = numerics.phase_align(w @ x, x @ w, tol)
            scale = max(numerics.frobenius(x), 1e-300)
            phases[key] = match.theta if match.matched else None
            residuals[key] = match.residual / scale
    return phases, residuals


@log_step("Evaluating collection conditions")
def check_collection(
    ch: RandomUnitaryChannel,
    collection: Sequence[BipartiteState],
    tol: float = DEFAULT_TOL,
) -> CollectionReport:
    """
    Check the pair conditions on the U side and the V side and run
    the determinism check on every state, cross-validating both.

    Raises:
        InputError: a state is not d x d or lacks full Schmidt rank
        InconsistencyError: the pair conditions and the determinism checks disagree
    """
    if not collection:
        raise InputError("The collection must contain at least one state")
    duals = []
    for j, psi in enumerate(collection, start=1):
        if psi.dims != (ch.d, ch.d):
            raise InputError(f"State {j} has dims {psi.dims}, expected {(ch.d, ch.d)}")
        if states.schmidt_decompose(psi).rank != ch.d:
            raise InputError(f"State {j} does not have full Schmidt rank {ch.d}")
        duals.append(states.to_dual(psi).matrix)

    labels = range(1, len(ch.terms) + 1)
    state_labels = range(1, len(duals) + 1)
    terms = {m: term for m, term in zip(labels, ch.terms)}
    chis = {j: chi for j, chi in zip(state_labels, duals)}

    generators_a = {
        (m, n): numerics.dagger(terms[m].U) @ terms[n].U
        for m, n in itertools.product(labels, repeat=2)
    }
    # fixed-basis duality puts the transpose on the V side
    generators_b = {
        (m, n): (numerics.dagger(terms[m].V) @ terms[n].V).T
        for m, n in itertools.product(labels, repeat=2)
    }
    products_a = {
        (j, k): chis[j] @ numerics.dagger(chis[k])
        for j, k in itertools.product(state_labels, repeat=2)
    }
    products_b = {
        (j, k): numerics.dagger(chis[j]) @ chis[k]
        for j, k in itertools.product(state_labels, repeat=2)
    }

    phases_a, residuals_a = _condition_grid("A", generators_a, products_a, tol)
    phases_b, residuals_b = _condition_grid("B", generators_b, products_b, tol)
    phase_table = {**phases_a, **phases_b}
    residuals = {**residuals_a, **residuals_b}

    def holds(side: str, reduced: bool) -> bool:
        return all(
            theta is not None
            for key, theta in phase_table.items()
            if key[0] == side and (not reduced or key[1] == 1)
        )

    def worst(side: str) -> float:
        return max(value for key, value in residuals.items() if key[0] == side)

    pair_a, pair_b = holds("A", False), holds("B", False)
    reduced_a, reduced_b = holds("A", True), holds("B", True)

    for side, reduced, full in (("A", reduced_a, pair_a), ("B", reduced_b, pair_b)):
        if reduced and not full and worst(side) > CONSISTENCY_SLACK * tol:
            raise InconsistencyError(
                f"Side {side} condition holds for m = 1 but fails on the full grid "
                f"(worst residual {worst(side):.3g})"
            )

    op = ch.as_separable_operation()
    outcomes = []
    for psi in collection:
        result = sepops.check_deterministic(op, psi, tol)
        if isinstance(result, sepops.DeterministicCertificate):
            outcomes.append(StateOutcome(True, result.phi, result))
        else:
            outcomes.append(StateOutcome(False))

    deterministic = [outcome.deterministic for outcome in outcomes]
    if all(deterministic) and not (pair_a and pair_b):
        if max(worst("A"), worst("B")) > CONSISTENCY_SLACK * tol:
            raise InconsistencyError(
                "Every state is mapped to a pure state but the pair conditions fail"
            )
    if (reduced_a or reduced_b) and any(deterministic) and not all(deterministic):
        for j, (psi, ok) in enumerate(zip(collection, deterministic), start=1):
            loose = sepops.check_deterministic(op, psi, CONSISTENCY_SLACK * tol)
            if not ok and isinstance(loose, sepops.NotDeterministic):
                raise InconsistencyError(
                    f"Pair condition holds and some state is mapped to a pure state, "
                    f"but state {j} is not"
                )

    return CollectionReport(
        pair_condition_A=pair_a,
        pair_condition_B=pair_b,
        reduced_condition_A=reduced_a,
        reduced_condition_B=reduced_b,
        per_state=tuple(outcomes),
        phase_table=phase_table,
        worst_residual=max(worst("A"), worst("B")),
    )


@dataclass(frozen=True, eq=False)
class FixedEigenspace:
    """Common eigenspace of the conjugation maps, one phase per generator."""

    phases: Tuple[complex, ...]
    basis: Tuple[CMatrix, ...]
    max_member_rank: int

    @property
    def phase(self) -> complex:
        return self.phases[0] if self.phases else 1.0 + 0.0j

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def has_full_rank_member(self) -> bool:
        return self.max_member_rank == self.basis[0].shape[0]

    def as_columns(self) -> CMatrix:
        return np.stack([c.ravel() for c in self.basis], axis=1)

    def member(self, coefficients: Sequence[complex]) -> BipartiteState:
        """Normalized state whose dual is sum_i coefficients[i] basis[i]."""
        if len(coefficients) != self.dimension:
            raise InputError(f"Expected {self.dimension} coefficients")
        matrix = sum(c * b for c, b in zip(coefficients, self.basis))
        d = self.basis[0].shape[0]
        return BipartiteState.normalized(d, d, np.ravel(matrix))


@dataclass(frozen=True, eq=False)
class FixedFamily:
    generator_pairs: Tuple[Tuple[CMatrix, CMatrix], ...]
    eigenspaces: Tuple[FixedEigenspace, ...]
    compatibility: np.ndarray

    @property
    def unconstrained(self) -> bool:
        return not self.generator_pairs


def _cluster_phases(eigenvalues: np.ndarray) -> List[complex]:
    clusters: List[List[complex]] = []
    for value in eigenvalues:
        for cluster in clusters:
            if abs(value - cluster[0]) <= EIGENVALUE_CLUSTER_TOL:
                cluster.append(value)
                break
        else:
            clusters.append([value])
    phases = []
    for cluster in clusters:
        mean = complex(np.mean(cluster))
        phases.append(mean / abs(mean))
    return sorted(phases, key=_phase_angle)


def _phase_angle(z: complex) -> float:
    angle = cmath.phase(z) % (2 * math.pi)
    return 0.0 if angle > 2 * math.pi - EIGENVALUE_CLUSTER_TOL else angle


def _null_columns(matrix: np.ndarray, atol: float) -> np.ndarray:
    """Orthonormal basis of the numerical null space, absolute threshold."""
    _, sigma, vdag = np.linalg.svd(matrix, full_matrices=True)
    rank = int(np.count_nonzero(sigma > atol))
    return numerics.dagger(vdag[rank:])


def _generic_member_rank(basis: Sequence[CMatrix]) -> int:
    rng = numerics.rng_for(MEMBER_RANK_SEED)
    coefficients = numerics.complex_gaussian(rng, len(basis))
    member = sum(c * b for c, b in zip(coefficients, basis))
    return numerics.numerical_rank(member, states.RANK_CUTOFF)


def _compatible(
    ch: RandomUnitaryChannel,
    first: FixedEigenspace,
    second: FixedEigenspace,
    tol: float,
) -> bool:
    """Pair conditions with m = 1 between members of two eigenspaces."""
    u1, v1 = ch.terms[0].U, ch.terms[0].V
    for term in ch.terms[1:]:
        w_a = numerics.dagger(u1) @ term.U
        w_b = (numerics.dagger(v1) @ term.V).T
        for c_1, c_2 in itertools.product(first.basis, second.basis):
            x_a = c_1 @ numerics.dagger(c_2)
            x_b = numerics.dagger(c_1) @ c_2
            if not numerics.phase_align(w_a @ x_a, x_a @ w_a, tol).matched:
                return False
            if not numerics.phase_align(w_b @ x_b, x_b @ w_b, tol).matched:
                return False
    return True


@log_step("Solving for fixed state families")
def fixed_states(ch: RandomUnitaryChannel, tol: float = DEFAULT_TOL) -> FixedFamily:
    """
    Dual matrices C with W_m C Y_m =. C for every m >= 2, where
    W_m = U_1^dagger U_m and Y_m = Vbar_m Vbar_1^dagger.

    Each conjugation map is unitary on the d^2-dimensional matrix space, so
    its eigenvalues are unimodular. Common eigenspaces are built by
    intersecting the current subspaces with each map's eigenspaces in turn.
    """
    d = ch.d
    u1, v1_bar = ch.terms[0].U, ch.terms[0].v_bar
    generators = tuple(
        (numerics.dagger(u1) @ term.U, term.v_bar @ numerics.dagger(v1_bar))
        for term in ch.terms[1:]
    )

    identity = np.eye(d * d, dtype=np.complex128)
    subspaces: List[Tuple[np.ndarray, Tuple[complex, ...]]] = [(identity, ())]
    for w, y in generators:
        superop = numerics.conjugation_superoperator(w, y)
        refined = []
        for omega in _cluster_phases(np.linalg.eigvals(superop)):
            shifted = superop - omega * identity
            for basis, phases in subspaces:
                coefficients = _null_columns(shifted @ basis, EIGENVALUE_CLUSTER_TOL)
                if coefficients.shape[1] == 0:
                    continue
                columns, _ = np.linalg.qr(basis @ coefficients)
                refined.append((columns, phases + (omega,)))
        subspaces = refined
        _logger.debug(f"{len(subspaces)} common eigenspaces")

    eigenspaces = []
    for columns, phases in subspaces:
        basis = tuple(columns[:, i].reshape(d, d) for i in range(columns.shape[1]))
        eigenspaces.append(
            FixedEigenspace(
                phases=phases, basis=basis, max_member_rank=_generic_member_rank(basis)
            )
        )

    size = len(eigenspaces)
    compatibility = np.ones((size, size), dtype=bool)
    for i, j in itertools.combinations_with_replacement(range(size), 2):
        ok = _compatible(ch, eigenspaces[i], eigenspaces[j], tol)
        compatibility[i, j] = compatibility[j, i] = ok

    return FixedFamily(
        generator_pairs=generators,
        eigenspaces=tuple(eigenspaces),
        compatibility=compatibility,
    )


EXAMPLE_FIXED_POINT_DUAL = np.array([[1, 1], [1, -1]], dtype=np.complex128) / 2
EXAMPLE_PLUS_SPAN = np.array([[1, 0, 1, 0], [0, 1, 0, -1]], dtype=np.complex128).T
EXAMPLE_MINUS_SPAN = np.array([[1, 0, -1, 0], [0, 1, 0, 1]], dtype=np.complex128).T


class ExampleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: float
    samples_per_family: int
    fixed_point_fidelity: float
    fixed_point_ok: bool
    dual_matches: bool
    plus_family_deterministic: int
    minus_family_deterministic: int
    families_recovered: bool
    collection_consistent: bool
    collection_size: int = 0

    @property
    def passed(self) -> bool:
        return (
            self.fixed_point_ok
            and self.dual_matches
            and self.plus_family_deterministic == self.samples_per_family
            and self.minus_family_deterministic == self.samples_per_family
            and self.families_recovered
            and self.collection_consistent
        )


def _recovers_example_families(family: FixedFamily, tol: float) -> bool:
    if len(family.eigenspaces) != 2:
        return False
    expected = {1.0: EXAMPLE_PLUS_SPAN, -1.0: EXAMPLE_MINUS_SPAN}
    for space in family.eigenspaces:
        target = min(expected, key=lambda sign: abs(space.phase - sign))
        if abs(space.phase - target) > tol or space.dimension != 2:
            return False
        if numerics.subspace_distance(space.as_columns(), expected[target]) > tol:
            return False
    return True


def cross_check_example(
    p: float, samples: int = EXAMPLE_SAMPLES, seed: int = 0, tol: float = DEFAULT_TOL
) -> ExampleReport:
    """End-to-end check of the two-qubit X (x) Z channel at mixing weight p."""
    if not 0.0 < p < 1.0:
        raise InputError(f"Mixing weight must lie in (0, 1), got {p}")
    ch = two_qubit_example_channel(p)
    op = ch.as_separable_operation()
    psi_1 = fixed_point_state()

    output = sepops.apply(op, psi_1.density(), tol)
    fidelity = float(np.real(np.vdot(psi_1.amplitudes, output @ psi_1.amplitudes)))
    dual_matches = bool(
        np.allclose(states.to_dual(psi_1).matrix, EXAMPLE_FIXED_POINT_DUAL, rtol=0.0, atol=tol)
    )

    rng = numerics.rng_for(seed)
    counts = {}
    members = [psi_1]
    for sign in (1, -1):
        count = 0
        for index in range(samples):
            a, b = numerics.complex_gaussian(rng, 2)
            member = example_family_state(a, b, sign)
            result = sepops.check_deterministic(op, member, tol)
            count += isinstance(result, sepops.DeterministicCertificate)
            if index < JOINT_MEMBERS_PER_FAMILY:
                members.append(member)
        counts[sign] = count

    family = fixed_states(ch, tol)
    collection = check_collection(ch, members, tol)

    return ExampleReport(
        p=p,
        samples_per_family=samples,
        fixed_point_fidelity=fidelity,
        fixed_point_ok=fidelity >= 1.0 - 1e-10,
        dual_matches=dual_matches,
        plus_family_deterministic=counts[1],
        minus_family_deterministic=counts[-1],
        families_recovered=_recovers_example_families(family, tol),
        collection_consistent=(
            collection.pair_condition_A
            and collection.pair_condition_B
            and collection.all_deterministic
        ),
        collection_size=len(members),
    )
