"""Tests for random unitary channels, collection checks and fixed-state families."""

import math

import numpy as np
import pytest

from septrans import lab, numerics, ruchannel, sepops, states
from septrans.numerics import IDENTITY2, PAULI_X, PAULI_Z
from septrans.ruchannel import RandomUnitaryChannel, UnitaryTerm
from septrans.schemas.models import InconsistencyError, InputError


def _plus_member(seed: int) -> states.BipartiteState:
    a, b = numerics.complex_gaussian(numerics.rng_for(seed), 2)
    return ruchannel.example_family_state(a, b, 1)


def _minus_member(seed: int) -> states.BipartiteState:
    a, b = numerics.complex_gaussian(numerics.rng_for(seed), 2)
    return ruchannel.example_family_state(a, b, -1)


def _rotated_diagonal_channel(seed: int) -> RandomUnitaryChannel:
    """(I, I) and (G Z G^dagger, H Z H^dagger) with Haar-random G and H."""
    g = numerics.haar_unitary(2, seed)
    h = numerics.haar_unitary(2, seed + 1)
    return RandomUnitaryChannel(
        2,
        (
            (0.4, IDENTITY2, IDENTITY2),
            (0.6, g @ PAULI_Z @ numerics.dagger(g), h @ PAULI_Z @ numerics.dagger(h)),
        ),
    )


def _rotated_collection(seed: int) -> list:
    """(G (x) H) applied to a|00> + b|11> states and one a|01> + b|10> state."""
    g = numerics.haar_unitary(2, seed)
    h = numerics.haar_unitary(2, seed + 1)
    raw = [[0.8, 0, 0, 0.6], [0.5, 0, 0, 0.5j], [0.3, 0, 0, -0.9], [0, 0.7, 0.4, 0]]
    collection = []
    for amplitudes in raw:
        base = states.BipartiteState.normalized(2, 2, amplitudes)
        collection.append(states.BipartiteState.normalized(2, 2, states.apply_local(base, g, h)))
    return collection


class TestChannelConstruction:
    """Test channel building and validation."""

    def test_example_channel_valid(self, example_channel):
        """Test the X (x) Z example passes every check."""
        report = ruchannel.validate_channel(example_channel)
        assert report.valid
        assert report.probability_residual == pytest.approx(0.0, abs=1e-15)
        assert report.closure_residual < 1e-12

    def test_scaled_unitary_rejected(self):
        """Test a factor 1.1 on U_1 breaks unitarity and closure."""
        ch = RandomUnitaryChannel(
            2, (UnitaryTerm(0.3, 1.1 * IDENTITY2, IDENTITY2), UnitaryTerm(0.7, PAULI_X, PAULI_Z))
        )
        report = ruchannel.validate_channel(ch)
        assert not report.valid
        assert report.unitarity_residuals[0] > 0.1
        assert report.unitarity_residuals[1] < 1e-12

    def test_probabilities_must_sum_to_one(self):
        """Test weights (0.3, 0.6) are rejected."""
        ch = RandomUnitaryChannel(
            2, (UnitaryTerm(0.3, IDENTITY2, IDENTITY2), UnitaryTerm(0.6, PAULI_X, PAULI_Z))
        )
        report = ruchannel.validate_channel(ch)
        assert not report.valid
        assert report.probability_residual == pytest.approx(0.1)

    def test_wrong_shape_rejected(self):
        """Test a 3x3 unitary in a d = 2 channel raises InputError."""
        with pytest.raises(InputError):
            RandomUnitaryChannel(2, ((1.0, np.eye(3), IDENTITY2),))

    def test_empty_rejected(self):
        """Test a channel without terms raises InputError."""
        with pytest.raises(InputError):
            RandomUnitaryChannel(2, ())

    @pytest.mark.parametrize("d,n_terms", [(2, 1), (2, 3), (3, 2)])
    def test_random_channel_valid(self, d, n_terms):
        """Test seeded random channels are valid and reproducible."""
        ch = ruchannel.random_local_unitary_channel(d, n_terms, 17)
        assert len(ch) == n_terms
        assert ruchannel.validate_channel(ch).valid
        again = ruchannel.random_local_unitary_channel(d, n_terms, 17)
        for first, second in zip(ch.terms, again.terms):
            assert first.p == second.p
            np.testing.assert_array_equal(first.U, second.U)

    def test_family_sign_checked(self):
        """Test signs other than +1 and -1 raise InputError."""
        with pytest.raises(InputError):
            ruchannel.example_family_state(1.0, 1.0, 0)

    def test_v_bar_is_transpose(self):
        """Test v_bar returns the plain transpose."""
        v = numerics.haar_unitary(2, 3)
        term = UnitaryTerm(1.0, IDENTITY2, v)
        np.testing.assert_array_equal(term.v_bar, v.T)


class TestCheckCollection:
    """Test the pair conditions on state collections."""

    def test_single_term_channel(self):
        """Test a single local unitary maps every full-rank collection deterministically."""
        ch = RandomUnitaryChannel(2, ((1.0, numerics.haar_unitary(2, 1), numerics.haar_unitary(2, 2)),))
        collection = [states.random_state(2, 2, seed) for seed in (3, 4, 5)]
        report = ruchannel.check_collection(ch, collection)
        assert report.pair_condition_A
        assert report.pair_condition_B
        assert report.all_deterministic

    def test_plus_family(self, example_channel, fixed_point):
        """Test the fixed point and plus-family members satisfy every condition."""
        collection = [fixed_point] + [_plus_member(seed) for seed in range(3)]
        report = ruchannel.check_collection(example_channel, collection)
        assert report.pair_condition_A
        assert report.pair_condition_B
        assert report.reduced_condition_A
        assert report.all_deterministic
        assert report.failures("A") == []
        assert report.worst_residual < 1e-12

    def test_mixed_families(self, example_channel):
        """Test plus and minus members together still satisfy the conditions."""
        collection = [_plus_member(7), _minus_member(8)]
        report = ruchannel.check_collection(example_channel, collection)
        assert report.pair_condition_A
        assert report.pair_condition_B
        assert report.all_deterministic
        assert report.phase_table[("A", 1, 2, 1, 2)] == pytest.approx(math.pi)

    def test_outsider_flips_the_report(self, example_channel, fixed_point):
        """Test adding a generic state breaks the conditions and its determinism."""
        outsider = states.random_state(2, 2, 21)
        report = ruchannel.check_collection(example_channel, [fixed_point, outsider])
        assert not report.pair_condition_A
        assert not report.pair_condition_B
        assert not report.reduced_condition_A
        assert not report.reduced_condition_B
        assert not report.all_deterministic
        assert report.per_state[0].deterministic
        assert not report.per_state[1].deterministic
        assert ("A", 1, 2, 2, 2) in report.failures("A")

    def test_phase_table_labels(self, example_channel, fixed_point):
        """Test keys are 1-based over (side, m, n, j, k)."""
        report = ruchannel.check_collection(example_channel, [fixed_point])
        assert set(report.phase_table) == {
            (side, m, n, 1, 1) for side in "AB" for m in (1, 2) for n in (1, 2)
        }
        assert report.phase_table[("A", 1, 1, 1, 1)] == pytest.approx(0.0, abs=1e-12)

    def test_rank_deficient_rejected(self, example_channel, product_state):
        """Test states without full Schmidt rank raise InputError."""
        with pytest.raises(InputError):
            ruchannel.check_collection(example_channel, [product_state])

    def test_wrong_dims_rejected(self, example_channel):
        """Test states on a 3x3 space raise InputError."""
        with pytest.raises(InputError):
            ruchannel.check_collection(example_channel, [states.random_state(3, 3, 1)])

    def test_empty_rejected(self, example_channel):
        """Test an empty collection raises InputError."""
        with pytest.raises(InputError):
            ruchannel.check_collection(example_channel, [])

    def test_independent_deterministic_collection(self):
        """Test a rotated diagonal channel and its collection pass both pair conditions."""
        for seed in (3, 11):
            ch = _rotated_diagonal_channel(seed)
            report = ruchannel.check_collection(ch, _rotated_collection(seed))
            assert report.all_deterministic
            assert report.pair_condition_A
            assert report.pair_condition_B
            assert report.failures("A") == report.failures("B") == []

    @pytest.mark.parametrize("kind", ["example", "rotated", "outsider"])
    def test_reduced_grid_matches_full_grid(self, kind, example_channel, fixed_point):
        """Test the m = 1 rows decide the full grid on both sides."""
        if kind == "example":
            ch, collection = example_channel, [fixed_point, _plus_member(1), _minus_member(2)]
        elif kind == "rotated":
            ch, collection = _rotated_diagonal_channel(5), _rotated_collection(5)
        else:
            ch, collection = example_channel, [fixed_point, states.random_state(2, 2, 21)]
        report = ruchannel.check_collection(ch, collection)
        assert report.reduced_condition_A == report.pair_condition_A
        assert report.reduced_condition_B == report.pair_condition_B
        assert report.pair_condition_A == report.pair_condition_B == report.all_deterministic

    @pytest.mark.parametrize("kind", ["example", "rotated"])
    def test_conjugated_products_do_not_depend_on_m(self, kind, example_channel, fixed_point):
        """Test U_m C_j C_k^dagger U_m^dagger agrees across m up to phase, also for V."""
        if kind == "example":
            ch, collection = example_channel, [fixed_point, _plus_member(4), _minus_member(5)]
        else:
            ch, collection = _rotated_diagonal_channel(7), _rotated_collection(7)
        chis = [states.to_dual(psi).matrix for psi in collection]
        for chi_j in chis:
            for chi_k in chis:
                left = chi_j @ numerics.dagger(chi_k)
                right = numerics.dagger(chi_j) @ chi_k
                first = ch.terms[0]
                left_ref = first.U @ left @ numerics.dagger(first.U)
                right_ref = np.conj(first.V) @ right @ first.V.T
                for term in ch.terms[1:]:
                    left_m = term.U @ left @ numerics.dagger(term.U)
                    right_m = np.conj(term.V) @ right @ term.V.T
                    assert numerics.phase_align(left_m, left_ref, 1e-9).matched
                    assert numerics.phase_align(right_m, right_ref, 1e-9).matched

    def test_certificates_attached(self, example_channel, fixed_point):
        """Test deterministic outcomes carry phi and the certificate."""
        report = ruchannel.check_collection(example_channel, [fixed_point])
        outcome = report.per_state[0]
        assert isinstance(outcome.certificate, sepops.DeterministicCertificate)
        assert outcome.phi.fidelity(fixed_point) == pytest.approx(1.0)


class TestCollectionConsistency:
    """Test contradictions between the pair conditions and the determinism checks."""

    def test_reduced_rows_hide_a_failing_grid(self):
        """Test a zero first term makes the m = 1 rows pass while the full grid fails."""
        zero = np.zeros((2, 2))
        ch = RandomUnitaryChannel(
            2, ((0.5, zero, zero), (0.25, IDENTITY2, IDENTITY2), (0.25, PAULI_X, PAULI_X))
        )
        psi = states.from_schmidt_coefficients([math.sqrt(0.7), math.sqrt(0.3)], 2, 2)
        with pytest.raises(InconsistencyError, match="m = 1"):
            ruchannel.check_collection(ch, [psi])

    def test_certified_states_with_failing_pair_conditions(
        self, example_channel, fixed_point, monkeypatch
    ):
        """Test certificates for every state contradict failing pair conditions."""
        certificate = sepops.check_deterministic(
            example_channel.as_separable_operation(), fixed_point
        )
        monkeypatch.setattr(sepops, "check_deterministic", lambda op, psi, tol=1e-9: certificate)
        outsider = states.random_state(2, 2, 21)
        with pytest.raises(InconsistencyError, match="pair conditions fail"):
            ruchannel.check_collection(example_channel, [fixed_point, outsider])

    def test_uncertified_member_under_passing_pair_conditions(
        self, example_channel, fixed_point, monkeypatch
    ):
        """Test a family member reported as not deterministic contradicts the pair conditions."""
        check = sepops.check_deterministic
        member = _plus_member(2)

        def fake(op, psi, tol=1e-9):
            if psi is member:
                return sepops.NotDeterministic(witness_m=2, residual=1.0)
            return check(op, psi, tol)

        monkeypatch.setattr(sepops, "check_deterministic", fake)
        with pytest.raises(InconsistencyError, match="state 2"):
            ruchannel.check_collection(example_channel, [fixed_point, member])


class TestFixedStates:
    """Test the common-eigenspace solver."""

    def test_example_families(self, example_channel):
        """Test the X (x) Z channel gives the plus and minus spans."""
        family = ruchannel.fixed_states(example_channel)
        assert not family.unconstrained
        assert len(family.eigenspaces) == 2
        by_phase = {round(space.phase.real): space for space in family.eigenspaces}
        assert set(by_phase) == {1, -1}
        assert numerics.subspace_distance(
            by_phase[1].as_columns(), ruchannel.EXAMPLE_PLUS_SPAN
        ) < 1e-9
        assert numerics.subspace_distance(
            by_phase[-1].as_columns(), ruchannel.EXAMPLE_MINUS_SPAN
        ) < 1e-9
        assert all(space.dimension == 2 for space in family.eigenspaces)
        assert all(space.has_full_rank_member for space in family.eigenspaces)

    def test_fixed_point_in_plus_span(self, example_channel, fixed_point):
        """Test the fixed-point dual lies in the +1 eigenspace."""
        family = ruchannel.fixed_states(example_channel)
        plus = next(s for s in family.eigenspaces if abs(s.phase - 1) < 1e-9)
        dual = states.to_dual(fixed_point).matrix.reshape(-1, 1)
        assert numerics.subspace_distance(
            np.hstack([plus.as_columns(), dual]), plus.as_columns()
        ) < 1e-9

    def test_members_are_deterministic(self, example_channel):
        """Test members built from each eigenspace are mapped to pure states."""
        family = ruchannel.fixed_states(example_channel)
        op = example_channel.as_separable_operation()
        for space in family.eigenspaces:
            member = space.member([0.6, 0.8j])
            result = sepops.check_deterministic(op, member)
            assert isinstance(result, sepops.DeterministicCertificate)

    def test_single_term_unconstrained(self):
        """Test a single term leaves the whole d^2 space."""
        ch = RandomUnitaryChannel(2, ((1.0, IDENTITY2, IDENTITY2),))
        family = ruchannel.fixed_states(ch)
        assert family.unconstrained
        assert len(family.eigenspaces) == 1
        assert family.eigenspaces[0].dimension == 4
        assert family.eigenspaces[0].phase == 1

    def test_no_full_rank_member(self):
        """Test (I, I) and (I, Z) only fix rank-one duals."""
        ch = RandomUnitaryChannel(
            2, ((0.5, IDENTITY2, IDENTITY2), (0.5, IDENTITY2, PAULI_Z))
        )
        family = ruchannel.fixed_states(ch)
        assert len(family.eigenspaces) == 2
        assert all(space.dimension == 2 for space in family.eigenspaces)
        assert not any(space.has_full_rank_member for space in family.eigenspaces)
        assert all(space.max_member_rank == 1 for space in family.eigenspaces)

    def test_compatibility_shape(self, example_channel):
        """Test the compatibility matrix is square with a true diagonal."""
        family = ruchannel.fixed_states(example_channel)
        assert family.compatibility.shape == (2, 2)
        assert np.all(np.diag(family.compatibility))

    def test_member_coefficient_count(self, example_channel):
        """Test member() needs one coefficient per basis matrix."""
        space = ruchannel.fixed_states(example_channel).eigenspaces[0]
        with pytest.raises(InputError):
            space.member([1.0])


class TestCrossCheckExample:
    """Test the end-to-end two-qubit example."""

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9, 1 - 1e-6])
    def test_passes(self, p):
        """Test every check passes across the mixing weights."""
        report = ruchannel.cross_check_example(p, samples=8)
        assert report.passed
        assert report.fixed_point_fidelity == pytest.approx(1.0, abs=1e-10)
        assert report.plus_family_deterministic == 8
        assert report.minus_family_deterministic == 8

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
    def test_weight_out_of_range(self, p):
        """Test weights outside (0, 1) raise InputError."""
        with pytest.raises(InputError):
            ruchannel.cross_check_example(p)

    def test_reproducible(self):
        """Test the same seed gives the same report."""
        first = ruchannel.cross_check_example(0.4, samples=4, seed=5)
        second = ruchannel.cross_check_example(0.4, samples=4, seed=5)
        assert first == second

    def test_default_sample_count(self):
        """Test the default run samples 64 members per family and passes."""
        report = ruchannel.cross_check_example(0.3)
        assert report.samples_per_family == 64
        assert report.plus_family_deterministic == 64
        assert report.minus_family_deterministic == 64
        assert report.passed

    def test_joint_collection_holds_both_families(self):
        """Test the joint check sees the fixed point and two members of each family."""
        assert ruchannel.cross_check_example(0.3, samples=4).collection_size == 5
        assert ruchannel.cross_check_example(0.3, samples=1).collection_size == 3

    def test_members_and_outsiders_agree_with_purity_oracle(self, example_channel):
        """Test 64 members per family and 64 outsiders against the purity oracle."""
        op = example_channel.as_separable_operation()
        rng = numerics.rng_for(2024)
        for sign in (1, -1):
            for _ in range(64):
                a, b = numerics.complex_gaussian(rng, 2)
                member = ruchannel.example_family_state(a, b, sign)
                result = sepops.check_deterministic(op, member, 1e-9)
                assert isinstance(result, sepops.DeterministicCertificate)
                assert lab.oracle_agrees(op, member, 1e-9)
        for seed in range(64):
            outsider = states.random_state(2, 2, 1000 + seed)
            result = sepops.check_deterministic(op, outsider, 1e-9)
            assert isinstance(result, sepops.NotDeterministic)
            assert lab.oracle_agrees(op, outsider, 1e-9)
