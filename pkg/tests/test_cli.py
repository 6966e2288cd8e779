"""Tests for the command-line interface."""

import json
import math

import numpy as np
import pytest
from typer.testing import CliRunner

from septrans import __version__, ruchannel, sepops, states
from septrans.cli import app
from septrans.schemas.models import StateFile
from septrans.utils.files import state_to_file
from septrans.utils.misc import format_coefficient

runner = CliRunner()


def _payload(result) -> dict:
    """Parse the JSON envelope printed on stdout."""
    return json.loads(result.stdout)


def _schmidt_state(*squares: float, d: int = 2) -> states.BipartiteState:
    return states.from_schmidt_coefficients([math.sqrt(s) for s in squares], d, d)


class TestFormatCoefficient:
    """Test the coefficient formatter used by the schmidt command."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (1.0, "1.0"),
            (0.9999999999999999, "1.0"),
            (1 / math.sqrt(2), "0.7071067811"),
            (0.6, "0.6"),
            (0.0, "0.0"),
        ],
    )
    def test_ten_decimals(self, value, expected):
        """Test values are cut to ten decimals with float noise rounded away."""
        assert format_coefficient(value) == expected


class TestSchmidtCommand:
    """Test the schmidt command."""

    def test_product_state(self, write_state, product_state):
        """Test |00> prints coefficient 1.0 and rank 1."""
        result = runner.invoke(app, ["schmidt", str(write_state(product_state))])
        assert result.exit_code == 0
        assert "coefficients: 1.0\n" in result.stdout
        assert "rank: 1" in result.stdout

    def test_fixed_point(self, write_state, fixed_point):
        """Test the fixed point prints two coefficients 1/sqrt(2)."""
        result = runner.invoke(app, ["schmidt", str(write_state(fixed_point))])
        assert result.exit_code == 0
        assert "coefficients: 0.7071067811, 0.7071067811\n" in result.stdout
        assert "rank: 2" in result.stdout

    def test_yaml_input(self, write_state, fixed_point):
        """Test YAML state files are accepted."""
        path = write_state(fixed_point, "psi.yaml")
        result = runner.invoke(app, ["schmidt", str(path)])
        assert result.exit_code == 0
        assert "rank: 2" in result.stdout

    def test_unnormalized_file(self, temp_dir):
        """Test an unnormalized state file exits with code 2."""
        path = temp_dir / "bad.json"
        path.write_text(
            json.dumps({"dims": [2, 2], "amplitudes": [[1, 0], [1, 0], [0, 0], [0, 0]]})
        )
        result = runner.invoke(app, ["schmidt", str(path)])
        assert result.exit_code == 2

    def test_missing_file(self, temp_dir):
        """Test a missing file exits with code 2."""
        result = runner.invoke(app, ["schmidt", str(temp_dir / "missing.json")])
        assert result.exit_code == 2

    def test_json_envelope(self, write_state, fixed_point):
        """Test --json prints the version, the input digest and a re-parsable state."""
        path = write_state(fixed_point)
        result = runner.invoke(app, ["schmidt", str(path), "--json"])
        assert result.exit_code == 0
        payload = _payload(result)
        assert payload["tool"] == "septrans"
        assert payload["version"] == __version__
        assert len(payload["inputs"][str(path)]) == 64
        assert payload["result"]["rank"] == 2
        assert StateFile.model_validate(payload["result"]["state"]) == state_to_file(fixed_point)

    def test_invalid_tol(self, write_state, fixed_point):
        """Test a tolerance outside (0, 1e-2) exits with code 2."""
        result = runner.invoke(app, ["schmidt", str(write_state(fixed_point)), "--tol", "0.5"])
        assert result.exit_code == 2


class TestVerdictCommand:
    """Test the verdict command exit codes."""

    def test_locc_possible(self, write_state):
        """Test (.7, .3) -> (.8, .2) exits 0."""
        psi = write_state(_schmidt_state(0.7, 0.3), "psi.json")
        phi = write_state(_schmidt_state(0.8, 0.2), "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi)])
        assert result.exit_code == 0
        assert "LoccPossible" in result.stdout

    def test_equal_spectra(self, write_state, fixed_point):
        """Test a state against a local-unitary image of itself exits 0."""
        rotated = states.BipartiteState(
            2, 2, states.apply_local(fixed_point, np.eye(2), np.array([[0, 1], [1, 0]]))
        )
        psi = write_state(fixed_point, "psi.json")
        phi = write_state(rotated, "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi), "--json"])
        assert result.exit_code == 0
        assert _payload(result)["result"]["tag"] == "EqualSpectra"

    def test_open_region(self, write_state):
        """Test the three-level open-region pair exits 3."""
        psi = write_state(_schmidt_state(0.4, 0.35, 0.25, d=3), "psi.json")
        phi = write_state(_schmidt_state(0.45, 0.28, 0.27, d=3), "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi), "--json"])
        assert result.exit_code == 3
        assert _payload(result)["result"]["tag"] == "OpenRegion"

    def test_impossible_product(self, write_state):
        """Test (.8, .2) -> (.7, .3) exits 1."""
        psi = write_state(_schmidt_state(0.8, 0.2), "psi.json")
        phi = write_state(_schmidt_state(0.7, 0.3), "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi)])
        assert result.exit_code == 1
        assert "ImpossibleProduct" in result.stdout

    def test_rank_increase(self, write_state, product_state, bell_state):
        """Test |00> -> Bell exits 1 with ImpossibleRank."""
        psi = write_state(product_state, "psi.json")
        phi = write_state(bell_state, "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi), "--json"])
        assert result.exit_code == 1
        assert _payload(result)["result"]["tag"] == "ImpossibleRank"

    def test_dimension_mismatch(self, write_state, fixed_point):
        """Test states on different spaces exit 2."""
        psi = write_state(fixed_point, "psi.json")
        phi = write_state(states.random_state(3, 3, 1), "phi.json")
        result = runner.invoke(app, ["verdict", str(psi), str(phi)])
        assert result.exit_code == 2


class TestVerifyOpCommand:
    """Test the verify-op command."""

    def test_identity(self, write_operation, write_state, identity_operation):
        """Test the identity certifies a random state."""
        op = write_operation(identity_operation)
        psi = write_state(states.random_state(2, 2, 3))
        result = runner.invoke(app, ["verify-op", str(op), str(psi)])
        assert result.exit_code == 0
        assert "deterministic" in result.stdout
        assert "p: [" in result.stdout

    def test_family_state_with_unitarity(self, write_operation, write_state, example_channel):
        """Test a family member is certified and every pair is proportional."""
        op = write_operation(example_channel.as_separable_operation())
        psi = write_state(ruchannel.example_family_state(0.6, 0.8, 1))
        result = runner.invoke(app, ["verify-op", str(op), str(psi), "--unitarity", "--json"])
        assert result.exit_code == 0
        payload = _payload(result)["result"]
        assert payload["deterministic"]
        assert payload["probabilities"] == pytest.approx([0.3, 0.7])
        assert payload["proportionality"]["all_proportional"]

    def test_not_deterministic(self, write_operation, write_state, product_state):
        """Test |00> at p = 0.5 exits 1 with witness branch 2."""
        op = write_operation(ruchannel.two_qubit_example_channel(0.5).as_separable_operation())
        psi = write_state(product_state)
        result = runner.invoke(app, ["verify-op", str(op), str(psi)])
        assert result.exit_code == 1
        assert "witness branch: 2" in result.stdout

    def test_closure_failure(self, write_operation, write_state, fixed_point):
        """Test an operation violating closure exits 2."""
        truncated = sepops.SeparableOperation(2, 2, ((math.sqrt(0.3) * np.eye(2), np.eye(2)),))
        op = write_operation(truncated)
        psi = write_state(fixed_point)
        result = runner.invoke(app, ["verify-op", str(op), str(psi)])
        assert result.exit_code == 2


class TestChannelCommands:
    """Test the channel sub-commands."""

    def test_fixed_states(self, write_channel, example_channel):
        """Test the example channel reports two eigenspaces."""
        path = write_channel(example_channel)
        result = runner.invoke(app, ["channel", "fixed-states", str(path), "--json"])
        assert result.exit_code == 0
        payload = _payload(result)["result"]
        assert not payload["unconstrained"]
        assert len(payload["eigenspaces"]) == 2
        assert all(space["dimension"] == 2 for space in payload["eigenspaces"])

    def test_fixed_states_human(self, write_channel, example_channel):
        """Test the human-readable listing names both eigenspaces."""
        path = write_channel(example_channel)
        result = runner.invoke(app, ["channel", "fixed-states", str(path)])
        assert result.exit_code == 0
        assert "Eigenspace 1" in result.stdout
        assert "Eigenspace 2" in result.stdout

    def test_unconstrained(self, write_channel):
        """Test a single-term channel is unconstrained."""
        ch = ruchannel.RandomUnitaryChannel(2, ((1.0, np.eye(2), np.eye(2)),))
        result = runner.invoke(app, ["channel", "fixed-states", str(write_channel(ch))])
        assert result.exit_code == 0
        assert "unconstrained (dimension 4)" in result.stdout

    def test_check_collection(self, write_channel, write_state, example_channel, fixed_point):
        """Test the fixed point with a family member exits 0."""
        ch = write_channel(example_channel)
        first = write_state(fixed_point, "a.json")
        second = write_state(ruchannel.example_family_state(0.3, 0.7j, 1), "b.json")
        result = runner.invoke(app, ["channel", "check-collection", str(ch), str(first), str(second)])
        assert result.exit_code == 0
        assert "all deterministic" in result.stdout

    def test_check_collection_outsider(self, write_channel, write_state, example_channel, fixed_point):
        """Test a generic state makes the command exit 1."""
        ch = write_channel(example_channel)
        first = write_state(fixed_point, "a.json")
        second = write_state(states.random_state(2, 2, 21), "b.json")
        result = runner.invoke(
            app, ["channel", "check-collection", str(ch), str(first), str(second), "--json"]
        )
        assert result.exit_code == 1
        payload = _payload(result)["result"]
        assert not payload["all_deterministic"]
        assert payload["per_state"][0]["deterministic"]

    def test_check_collection_rank_deficient(
        self, write_channel, write_state, example_channel, product_state
    ):
        """Test a product state in the collection exits 2."""
        ch = write_channel(example_channel)
        result = runner.invoke(
            app, ["channel", "check-collection", str(ch), str(write_state(product_state))]
        )
        assert result.exit_code == 2

    def test_invalid_channel_file(self, temp_dir, write_state, fixed_point):
        """Test a channel with a non-unitary U exits 2."""
        path = temp_dir / "channel.json"
        path.write_text(
            json.dumps(
                {
                    "dim": 2,
                    "terms": [
                        {
                            "p": 1.0,
                            "U": [[[1.1, 0], [0, 0]], [[0, 0], [1, 0]]],
                            "V": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                        }
                    ],
                }
            )
        )
        result = runner.invoke(
            app, ["channel", "check-collection", str(path), str(write_state(fixed_point))]
        )
        assert result.exit_code == 2

    def test_example(self):
        """Test the built-in example passes at p = 0.3."""
        result = runner.invoke(app, ["channel", "example", "0.3", "-n", "4"])
        assert result.exit_code == 0
        assert "passed" in result.stdout

    def test_example_json(self):
        """Test the JSON report carries the counts and the pass flag."""
        result = runner.invoke(app, ["channel", "example", "0.5", "-n", "4", "--json"])
        assert result.exit_code == 0
        payload = _payload(result)["result"]
        assert payload["passed"]
        assert payload["plus_family_deterministic"] == 4

    def test_example_out_of_range(self):
        """Test p = 1.5 exits 2."""
        result = runner.invoke(app, ["channel", "example", "1.5"])
        assert result.exit_code == 2


class TestSweepCommand:
    """Test the sweep command."""

    @pytest.mark.parametrize(
        "name",
        [
            "theorem1_product",
            "corollary2_collapse",
            "majorization_implies_product",
            "minkowski",
            "theorem2_example",
            "determinism_oracle_agreement",
            "equal_spectra_proportionality",
        ],
    )
    def test_registered_names(self, name):
        """Test every registered sweep name runs from the command line."""
        result = runner.invoke(app, ["sweep", name, "--trials", "3", "--seed", "1", "--json"])
        assert result.exit_code == 0
        assert _payload(result)["result"]["name"] == name

    @pytest.mark.slow
    def test_documented_collapse_run(self):
        """Test corollary2_collapse with 1000 trials and seed 1 has no failures."""
        result = runner.invoke(
            app, ["sweep", "corollary2_collapse", "--trials", "1000", "--seed", "1", "--json"]
        )
        assert result.exit_code == 0
        assert _payload(result)["result"]["failures"] == 0

    @pytest.mark.slow
    def test_documented_example_run(self):
        """Test theorem2_example with 50 trials and seed 3 has no failures."""
        result = runner.invoke(
            app, ["sweep", "theorem2_example", "--trials", "50", "--seed", "3", "--json"]
        )
        assert result.exit_code == 0
        assert _payload(result)["result"]["failures"] == 0

    def test_alias_name(self):
        """Test a descriptive alias runs the registered sweep."""
        result = runner.invoke(app, ["sweep", "qubit_collapse", "-n", "5", "--json"])
        assert result.exit_code == 0
        assert _payload(result)["result"]["name"] == "corollary2_collapse"

    def test_passing_sweep(self):
        """Test a short passing sweep exits 0."""
        result = runner.invoke(app, ["sweep", "corollary2_collapse", "--trials", "20", "--seed", "1"])
        assert result.exit_code == 0
        assert "failures" in result.stdout

    def test_json_report(self):
        """Test the JSON report has zero failures and the requested trial count."""
        result = runner.invoke(app, ["sweep", "minkowski", "-n", "10", "-s", "2", "--json"])
        assert result.exit_code == 0
        payload = _payload(result)["result"]
        assert payload["trials"] == 10
        assert payload["failures"] == 0
        assert payload["seeds_of_failures"] == []

    def test_unknown_sweep(self):
        """Test an unknown sweep name exits 2."""
        result = runner.invoke(app, ["sweep", "nope"])
        assert result.exit_code == 2


class TestRootOptions:
    """Test the root callback options."""

    def test_version(self):
        """Test --version prints the package version."""
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert f"septrans v{__version__}" in result.stdout

    def test_missing_config(self, temp_dir, write_state, fixed_point):
        """Test an explicit missing settings file exits 2."""
        result = runner.invoke(
            app,
            ["--config", str(temp_dir / "nope.yaml"), "schmidt", str(write_state(fixed_point))],
        )
        assert result.exit_code == 2

    def test_config_tolerance_used(self, temp_dir, write_state, fixed_point):
        """Test the settings-file tolerance is echoed in the JSON envelope."""
        settings = temp_dir / "septrans.yaml"
        settings.write_text("tol: 1.0e-7\n")
        result = runner.invoke(
            app,
            ["--config", str(settings), "schmidt", str(write_state(fixed_point)), "--json"],
        )
        assert result.exit_code == 0
        assert _payload(result)["tol"] == pytest.approx(1e-7)
