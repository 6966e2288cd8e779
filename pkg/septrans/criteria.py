"""Spectrum-level transformability verdicts.

Spectra are Schmidt coefficients (not their squares). Majorization is defined
on the squared coefficients, the probability vectors of the reduced states.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

from septrans import numerics, states
from septrans.logger import get_logger
from septrans.numerics import DEFAULT_TOL
from septrans.schemas.models import InconsistencyError, InputError
from septrans.states import BipartiteState

_logger = get_logger("criteria")

SPECTRUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    """Descending nonnegative Schmidt coefficients with unit sum of squares."""

    values: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise InputError("A spectrum needs at least one finite value")
        if np.any(values < 0.0):
            raise InputError("Schmidt coefficients must be nonnegative")
        if np.any(np.diff(values) > SPECTRUM_TOL):
            raise InputError("Schmidt coefficients must be sorted in descending order")
        total = float(np.sum(values**2))
        if abs(total - 1.0) > SPECTRUM_TOL:
            raise InputError(f"Squared coefficients sum to {total:.12g}, expected 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_squares(cls, probabilities: Sequence[float]) -> "SchmidtSpectrum":
        """Sort, normalize and take square roots of a probability vector."""
        squares = np.sort(np.clip(np.asarray(probabilities, dtype=np.float64), 0, None))
        squares = squares[::-1] / np.sum(squares)
        return cls(np.sqrt(squares))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def squares(self) -> npt.NDArray[np.float64]:
        return self.values**2

    def padded(self, length: int) -> npt.NDArray[np.float64]:
        out = np.zeros(max(length, len(self)))
        out[: len(self)] = self.values
        return out

    def rank(self, cutoff: float = states.RANK_CUTOFF) -> int:
        return int(np.count_nonzero(self.values > cutoff * self.values[0]))

    def equals(self, other: "SchmidtSpectrum", tol: float) -> bool:
        length = max(len(self), len(other))
        return bool(np.all(np.abs(self.padded(length) - other.padded(length)) <= tol))


def spectrum_of(psi: BipartiteState, cutoff: float = states.RANK_CUTOFF) -> SchmidtSpectrum:
    """Schmidt spectrum of a state with sub-cutoff coefficients set to zero."""
    decomposition = states.schmidt_decompose(psi, cutoff)
    values = np.array(decomposition.coefficients)
    values[decomposition.rank :] = 0.0
    return SchmidtSpectrum(values / np.linalg.norm(values))


def majorizes(mu: SchmidtSpectrum, lam: SchmidtSpectrum, tol: float = DEFAULT_TOL) -> bool:
    """True iff every partial sum of mu^2 dominates that of lam^2."""
    length = max(len(mu), len(lam))
    mu_sums = np.cumsum(mu.padded(length) ** 2)
    lam_sums = np.cumsum(lam.padded(length) ** 2)
    return bool(np.all(mu_sums >= lam_sums - tol))


class ProductCondition(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    lhs: float
    rhs: float


def product_condition(
    lam: SchmidtSpectrum, mu: SchmidtSpectrum, tol: float = DEFAULT_TOL
) -> ProductCondition:
    """Compare the products of the first r coefficients, r = rank of lam."""
    r = lam.rank()
    length = max(len(lam), len(mu))
    lhs = float(np.prod(lam.padded(length)[:r]))
    rhs = float(np.prod(mu.padded(length)[:r]))
    return ProductCondition(holds=lhs >= rhs - tol, lhs=lhs, rhs=rhs)


def gram_determinant(psi: BipartiteState, cutoff: float = states.RANK_CUTOFF) -> float:
    """det(psi^dagger psi) on the support, the square of the coefficient product."""
    basis_a, basis_b = states.support_bases(psi, cutoff)
    chi = states.to_dual(psi).matrix
    restricted = numerics.dagger(basis_a) @ chi @ np.conj(basis_b)
    return float(numerics.det(numerics.dagger(restricted) @ restricted).real)


class VerdictTag(str, Enum):
    IMPOSSIBLE_RANK = "ImpossibleRank"
    IMPOSSIBLE_PRODUCT = "ImpossibleProduct"
    EQUAL_SPECTRA = "EqualSpectra"
    LOCC_POSSIBLE = "LoccPossible"
    OPEN_REGION = "OpenRegion"


VERDICT_DESCRIPTIONS = {
    VerdictTag.IMPOSSIBLE_RANK: "Schmidt rank would increase; no separable map exists",
    VerdictTag.IMPOSSIBLE_PRODUCT: "product condition fails; no separable map exists",
    VerdictTag.EQUAL_SPECTRA: "equal Schmidt coefficients; local unitaries suffice",
    VerdictTag.LOCC_POSSIBLE: "majorization holds; a deterministic LOCC map exists",
    VerdictTag.OPEN_REGION: (
        "necessary conditions pass; LOCC impossible; separable-map existence unknown"
    ),
}


class VerdictDetails(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_psi: int
    r_phi: int
    product_psi: float
    product_phi: float
    majorization: bool
    equality_case: bool = False


class TransformVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    tag: VerdictTag
    details: VerdictDetails

    @property
    def description(self) -> str:
        return VERDICT_DESCRIPTIONS[self.tag]

    @property
    def impossible(self) -> bool:
        return self.tag in (VerdictTag.IMPOSSIBLE_RANK, VerdictTag.IMPOSSIBLE_PRODUCT)


def transform_verdict(
    lam: SchmidtSpectrum,
    mu: SchmidtSpectrum,
    tol: float = DEFAULT_TOL,
    certified: bool = False,
) -> TransformVerdict:
    """
    Classify the map psi(lam) -> phi(mu).

    Ladder: rank increase, product condition, equal products, majorization,
    otherwise the open region. EqualSpectra requires the entries to agree
    within ``tol``. Equal positive products force equal spectra
    for any deterministic separable map; with ``certified=True`` the caller
    holds such a map, so unequal spectra raise InconsistencyError. Without a
    certificate the same pair has no separable map and is tagged
    ImpossibleProduct with ``equality_case`` set.
    """
    product = product_condition(lam, mu, tol)
    major = majorizes(mu, lam, tol)
    r_psi, r_phi = lam.rank(), mu.rank()

    def verdict(tag: VerdictTag, equality_case: bool = False) -> TransformVerdict:
        details = VerdictDetails(
            r_psi=r_psi,
            r_phi=r_phi,
            product_psi=product.lhs,
            product_phi=product.rhs,
            majorization=major,
            equality_case=equality_case,
        )
        return TransformVerdict(tag=tag, details=details)

    if r_phi > r_psi:
        return verdict(VerdictTag.IMPOSSIBLE_RANK)
    if not product.holds:
        return verdict(VerdictTag.IMPOSSIBLE_PRODUCT)

    scale = max(product.lhs, product.rhs)
    if product.lhs > tol and abs(product.lhs - product.rhs) <= tol * scale:
        if lam.equals(mu, tol):
            return verdict(VerdictTag.EQUAL_SPECTRA)
        # the product is flat near the maximally entangled point, so a strictly
        # majorizing target can tie within tol; majorization then decides
        if major:
            return verdict(VerdictTag.LOCC_POSSIBLE)
        if certified:
            raise InconsistencyError(
                "Equal Schmidt-coefficient products with different spectra under a "
                f"certified deterministic map: {lam.values} vs {mu.values}"
            )
        _logger.debug("Equal products with unequal spectra: no separable map")
        return verdict(VerdictTag.IMPOSSIBLE_PRODUCT, equality_case=True)

    if major:
        return verdict(VerdictTag.LOCC_POSSIBLE)
    return verdict(VerdictTag.OPEN_REGION)


def verdict_for_states(
    psi: BipartiteState,
    phi: BipartiteState,
    tol: float = DEFAULT_TOL,
    certified: bool = False,
) -> TransformVerdict:
    if psi.dims != phi.dims:
        raise InputError(f"States live on different spaces: {psi.dims} vs {phi.dims}")
    return transform_verdict(spectrum_of(psi), spectrum_of(phi), tol, certified)


class ReverseVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    reverse_possible_necessary: bool


def reverse_verdict(
    lam: SchmidtSpectrum, mu: SchmidtSpectrum, tol: float = DEFAULT_TOL
) -> ReverseVerdict:
    """Necessary condition for undoing psi -> phi: the spectra must coincide."""
    forward = transform_verdict(lam, mu, tol)
    if forward.impossible:
        raise InputError(f"The forward map is already ruled out ({forward.tag.value})")
    return ReverseVerdict(reverse_possible_necessary=lam.equals(mu, tol))


class CollapseReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    product_holds: bool
    majorization_holds: bool
    agree: bool


def dim2_collapse(
    lam: SchmidtSpectrum, mu: SchmidtSpectrum, tol: float = DEFAULT_TOL
) -> CollapseReport:
    """
    With two Schmidt coefficients the product condition and majorization agree.

    Predicates that differ are still counted as agreeing when either one sits
    within its own tolerance band, where the comparison is decided by rounding.
    """
    if len(lam) != 2 or len(mu) != 2:
        raise InputError("Both spectra must have exactly two entries")
    product = product_condition(lam, mu, tol)
    major = majorizes(mu, lam, tol)
    product_margin = abs(product.lhs - product.rhs)
    major_margin = abs(mu.values[0] ** 2 - lam.values[0] ** 2)
    on_boundary = min(product_margin, major_margin) <= 2 * tol
    return CollapseReport(
        product_holds=product.holds,
        majorization_holds=major,
        agree=(product.holds == major) or on_boundary,
    )


class MinkowskiReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    lhs: float
    rhs: float
    gap: float
    proportional: bool


def _root_det(matrix: np.ndarray) -> float:
    eigenvalues = np.clip(numerics.psd_eigenvalues(matrix), 0.0, None)
    return float(np.prod(eigenvalues ** (1.0 / eigenvalues.size)))


def _proportional(q_i: np.ndarray, q_j: np.ndarray, tol: float) -> bool:
    norm_i, norm_j = numerics.frobenius(q_i), numerics.frobenius(q_j)
    if norm_i == 0.0 or norm_j == 0.0:
        return norm_i == norm_j
    factor = float(np.vdot(q_j, q_i).real) / norm_j**2
    if factor <= 0.0:
        return False
    return numerics.frobenius(q_i - factor * q_j) <= tol * max(norm_i, norm_j)


def minkowski_check(q_list: Sequence, tol: float = DEFAULT_TOL) -> MinkowskiReport:
    """det(sum Q)^(1/D) against sum det(Q)^(1/D) for PSD Q of size D."""
    if len(q_list) == 0:
        raise InputError("Minkowski check needs at least one matrix")
    matrices = [numerics.as_cmatrix(q, "Q") for q in q_list]
    size = matrices[0].shape
    for q in matrices:
        if q.shape != size or size[0] != size[1]:
            raise InputError(f"All matrices must be square of shape {size}")
        scale = max(1.0, numerics.frobenius(q))
        if numerics.hermitian_residual(q) > tol * scale:
            raise InputError("Minkowski check needs Hermitian matrices")
        if numerics.psd_eigenvalues(q)[0] < -tol * scale:
            raise InputError("Minkowski check needs positive semidefinite matrices")

    lhs = _root_det(sum(matrices))
    rhs = sum(_root_det(q) for q in matrices)
    proportional = all(_proportional(q, matrices[0], tol) for q in matrices[1:])
    return MinkowskiReport(lhs=lhs, rhs=rhs, gap=lhs - rhs, proportional=proportional)
