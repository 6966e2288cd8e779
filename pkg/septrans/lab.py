"""Seeded samplers, brute-force oracles and the property-sweep registry."""

import concurrent.futures
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from septrans import criteria, numerics, ruchannel, sepops, states
from septrans.criteria import SchmidtSpectrum
from septrans.logger import SweepLogger, get_logger
from septrans.numerics import CMatrix, DEFAULT_TOL
from septrans.schemas.models import InputError, SeptransError

_logger = get_logger("lab")

PRODUCT_SLACK = 1e-9
COLLAPSE_TOL = 1e-12
MINKOWSKI_FLOOR = -1e-12
MINKOWSKI_EQUALITY_TOL = 1e-10
DISTINCT_SPECTRA = 1e-6


def sample_spectrum(d: int, seed: int) -> SchmidtSpectrum:
    """Flat simplex sample of squared coefficients via normalized exponentials."""
    if d < 1:
        raise InputError(f"Spectrum length must be positive, got {d}")
    spacings = numerics.rng_for(seed).exponential(size=d)
    return SchmidtSpectrum.from_squares(spacings / spacings.sum())


def sample_majorizing_pair(
    d: int, seed: int, steps: Optional[int] = None
) -> Tuple[SchmidtSpectrum, SchmidtSpectrum]:
    """
    Return (lam, mu) with mu majorizing lam.

    mu^2 is a simplex sample; lam^2 follows from ``steps`` T-transforms of
    mu^2 (1 to 3 when not given). A T-transform replaces a pair of entries by
    convex combinations of each other and never climbs the majorization order.
    """
    if d < 2:
        raise InputError(f"Majorizing pairs need d >= 2, got {d}")
    rng = numerics.rng_for(seed)
    spacings = rng.exponential(size=d)
    mu_squares = np.sort(spacings / spacings.sum())[::-1]
    if steps is None:
        steps = int(rng.integers(1, 4))

    lam_squares = mu_squares.copy()
    for _ in range(steps):
        i, j = rng.choice(d, size=2, replace=False)
        t = rng.uniform()
        x_i, x_j = lam_squares[i], lam_squares[j]
        lam_squares[i] = t * x_i + (1.0 - t) * x_j
        lam_squares[j] = (1.0 - t) * x_i + t * x_j

    return SchmidtSpectrum.from_squares(lam_squares), SchmidtSpectrum.from_squares(mu_squares)


def random_psd(size: int, seed: int, rank: Optional[int] = None) -> CMatrix:
    """Trace-one Wishart-type matrix G G^dagger."""
    rank = size if rank is None else rank
    g = numerics.complex_gaussian(numerics.rng_for(seed), (size, rank))
    q = g @ numerics.dagger(g)
    return q / np.trace(q).real


class PurityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    pure: bool
    largest_eigenvalue: float


def purity_oracle(rho, tol: float = DEFAULT_TOL) -> PurityReport:
    """Pure iff the largest eigenvalue of rho reaches 1 - tol."""
    rho = states.validate_density_matrix(rho, np.asarray(rho).shape[0], tol)
    largest = float(numerics.psd_eigenvalues(rho)[-1])
    return PurityReport(pure=largest >= 1.0 - tol, largest_eigenvalue=largest)


def oracle_agrees(
    op: sepops.SeparableOperation, psi: states.BipartiteState, tol: float = DEFAULT_TOL
) -> bool:
    """Does the purity of the output match the existence of a certificate?"""
    output = sepops.apply(op, psi.density(), tol)
    certified = isinstance(
        sepops.check_deterministic(op, psi, tol), sepops.DeterministicCertificate
    )
    return purity_oracle(output, tol).pure == certified


def derive_seed(master_seed: int, index: int) -> int:
    """Trial seed as a pure function of (master_seed, index)."""
    sequence = np.random.SeedSequence([int(master_seed) % (1 << 64), index])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrialOutcome:
    failed: bool
    residual: float = 0.0


class SweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    trials: int
    failures: int
    seeds_of_failures: List[int]
    worst_residual: float
    elapsed: float

    @model_validator(mode="after")
    def validate_failures(self) -> "SweepReport":
        if self.failures != len(self.seeds_of_failures):
            raise ValueError("failures must equal the number of failure seeds")
        return self

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _locc_product_bound(seed: int) -> TrialOutcome:
    lam, mu = sample_majorizing_pair(2, seed)
    op = sepops.construct_two_qubit_locc(lam.values, mu.values)
    psi = states.from_schmidt_coefficients(lam.values, 2, 2)
    result = sepops.check_deterministic(op, psi)
    if not isinstance(result, sepops.DeterministicCertificate):
        return TrialOutcome(failed=True, residual=result.residual)
    produced = criteria.spectrum_of(result.phi)
    lhs = float(np.prod(lam.values))
    rhs = float(np.prod(produced.values))
    wrong_target = not produced.equals(mu, 1e-8)
    return TrialOutcome(
        failed=wrong_target or lhs < rhs - PRODUCT_SLACK, residual=max(0.0, rhs - lhs)
    )


def _qubit_collapse(seed: int) -> TrialOutcome:
    lam = sample_spectrum(2, derive_seed(seed, 0))
    mu = sample_spectrum(2, derive_seed(seed, 1))
    report = criteria.dim2_collapse(lam, mu, COLLAPSE_TOL)
    return TrialOutcome(failed=not report.agree)


def _majorization_implies_product(seed: int) -> TrialOutcome:
    lam, mu = sample_majorizing_pair(4, seed)
    condition = criteria.product_condition(lam, mu)
    return TrialOutcome(
        failed=not condition.holds, residual=max(0.0, condition.rhs - condition.lhs)
    )


def _minkowski(seed: int) -> TrialOutcome:
    rng = numerics.rng_for(seed)
    count = int(rng.integers(2, 5))
    size = int(rng.integers(2, 10))
    proportional = bool(rng.integers(3) == 0)
    if proportional:
        base = random_psd(size, derive_seed(seed, 0))
        family = [float(rng.uniform(0.1, 2.0)) * base for _ in range(count)]
    else:
        family = [random_psd(size, derive_seed(seed, k)) for k in range(count)]

    report = criteria.minkowski_check(family)
    failed = report.gap < MINKOWSKI_FLOOR
    if proportional:
        failed = failed or not report.proportional or abs(report.gap) > MINKOWSKI_EQUALITY_TOL
        return TrialOutcome(failed=failed, residual=abs(report.gap))
    return TrialOutcome(failed=failed, residual=max(0.0, -report.gap))


def _channel_example(seed: int) -> TrialOutcome:
    rng = numerics.rng_for(seed)
    p = float(rng.uniform(0.05, 0.95))
    report = ruchannel.cross_check_example(p, samples=8, seed=derive_seed(seed, 0))

    ch = ruchannel.two_qubit_example_channel(p)
    outsider = states.random_state(2, 2, derive_seed(seed, 1))
    collection = ruchannel.check_collection(ch, [ruchannel.fixed_point_state(), outsider])
    flipped = not collection.all_deterministic and not collection.pair_condition_A
    return TrialOutcome(failed=not (report.passed and flipped))


def _random_instance(seed: int):
    rng = numerics.rng_for(seed)
    kind = int(rng.integers(4))
    if kind == 0:
        ch = ruchannel.two_qubit_example_channel(float(rng.uniform(0.05, 0.95)))
        a, b = numerics.complex_gaussian(rng, 2)
        return ch.as_separable_operation(), ruchannel.example_family_state(
            a, b, int(rng.choice([1, -1]))
        )
    if kind == 1:
        ch = ruchannel.two_qubit_example_channel(float(rng.uniform(0.05, 0.95)))
        return ch.as_separable_operation(), states.random_state(2, 2, derive_seed(seed, 0))
    if kind == 2:
        d = int(rng.integers(2, 4))
        ch = ruchannel.random_local_unitary_channel(d, int(rng.integers(1, 4)), derive_seed(seed, 1))
        return ch.as_separable_operation(), states.random_state(d, d, derive_seed(seed, 2))
    lam, mu = sample_majorizing_pair(2, derive_seed(seed, 3))
    op = sepops.construct_two_qubit_locc(lam.values, mu.values)
    return op, states.from_schmidt_coefficients(lam.values, 2, 2)


def _determinism_oracle_agreement(seed: int) -> TrialOutcome:
    op, psi = _random_instance(seed)
    return TrialOutcome(failed=not oracle_agrees(op, psi))


def _distinct_locc_pair(seed: int) -> Tuple[SchmidtSpectrum, SchmidtSpectrum]:
    attempt = 0
    while True:
        lam, mu = sample_majorizing_pair(2, derive_seed(seed, attempt))
        if not lam.equals(mu, DISTINCT_SPECTRA):
            return lam, mu
        attempt += 1


def _equal_spectra_proportionality(seed: int) -> TrialOutcome:
    rng = numerics.rng_for(seed)
    if rng.integers(2) == 0:
        d = int(rng.integers(2, 4))
        ch = ruchannel.random_local_unitary_channel(d, int(rng.integers(1, 4)), derive_seed(seed, 0))
        psi = states.random_state(d, d, derive_seed(seed, 1))
        certificate = sepops.unitary_proportionality(ch.as_separable_operation(), psi)
        return TrialOutcome(failed=not certificate.all_proportional)

    lam, mu = _distinct_locc_pair(derive_seed(seed, 2))
    op = sepops.construct_two_qubit_locc(lam.values, mu.values)
    psi = states.from_schmidt_coefficients(lam.values, 2, 2)
    certificate = sepops.unitary_proportionality(op, psi)
    return TrialOutcome(failed=certificate.all_proportional)


SWEEPS: Dict[str, Callable[[int], TrialOutcome]] = {
    "theorem1_product": _locc_product_bound,
    "corollary2_collapse": _qubit_collapse,
    "majorization_implies_product": _majorization_implies_product,
    "minkowski": _minkowski,
    "theorem2_example": _channel_example,
    "determinism_oracle_agreement": _determinism_oracle_agreement,
    "equal_spectra_proportionality": _equal_spectra_proportionality,
}

# descriptive names accepted in place of the registered ones
SWEEP_ALIASES: Dict[str, str] = {
    "locc_product_bound": "theorem1_product",
    "qubit_collapse": "corollary2_collapse",
    "channel_example": "theorem2_example",
}


def resolve_sweep_name(name: str) -> str:
    canonical = SWEEP_ALIASES.get(name, name)
    if canonical not in SWEEPS:
        available = ", ".join(sorted(SWEEPS))
        raise InputError(f"Unknown sweep '{name}'. Available: {available}")
    return canonical


def _run_trial(trial: Callable[[int], TrialOutcome], seed: int) -> TrialOutcome:
    try:
        return trial(seed)
    except SeptransError as e:
        _logger.debug(f"Trial with seed {seed} raised {type(e).__name__}: {e}")
        return TrialOutcome(failed=True, residual=math.inf)


def run_sweep(name: str, trials: int, master_seed: int, workers: int = 1) -> SweepReport:
    """
    Run a registered sweep and merge the outcomes.

    Trial i uses ``derive_seed(master_seed, i)``; the merge only counts,
    takes maxima and sorts, so the report does not depend on ``workers``.
    """
    name = resolve_sweep_name(name)
    if trials < 0:
        raise InputError(f"Trial count must be nonnegative, got {trials}")
    if workers < 1:
        raise InputError(f"Worker count must be positive, got {workers}")

    trial = SWEEPS[name]
    seeds = [derive_seed(master_seed, i) for i in range(trials)]
    with SweepLogger(f"sweep {name} ({trials} trials)", _logger) as timer:
        if workers == 1:
            outcomes = [_run_trial(trial, seed) for seed in seeds]
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
                outcomes = list(executor.map(lambda s: _run_trial(trial, s), seeds))
        elapsed = timer.elapsed

    failing = sorted(seed for seed, outcome in zip(seeds, outcomes) if outcome.failed)
    residuals = [outcome.residual for outcome in outcomes]
    return SweepReport(
        name=name,
        trials=trials,
        failures=len(failing),
        seeds_of_failures=failing,
        worst_residual=max(residuals, default=0.0),
        elapsed=elapsed,
    )
