"""Pytest configuration and fixtures for septrans tests."""

import tempfile
from pathlib import Path
from unittest.mock import Mock

import numpy as np
import pytest

from septrans import ruchannel, sepops, states
from septrans.utils.files import (
    channel_to_file,
    operation_to_file,
    state_to_file,
    write_model,
)


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def example_channel():
    """The two-qubit X (x) Z channel at p = 0.3."""
    return ruchannel.two_qubit_example_channel(0.3)


@pytest.fixture
def fixed_point():
    """(|+>|0> + |->|1>) / sqrt(2), mapped to itself by the example channel."""
    return ruchannel.fixed_point_state()


@pytest.fixture
def product_state():
    """|00>."""
    return states.BipartiteState(2, 2, [1, 0, 0, 0])


@pytest.fixture
def bell_state():
    return states.BipartiteState.normalized(2, 2, [1, 0, 0, 1])


@pytest.fixture
def identity_operation():
    """Single Kraus pair (I, I) on two qubits."""
    return sepops.SeparableOperation(2, 2, ((np.eye(2), np.eye(2)),))


@pytest.fixture
def write_state(temp_dir):
    """Write a state to a JSON (or YAML) file and return its path."""

    def _write(psi, name="state.json"):
        return write_model(state_to_file(psi), temp_dir / name)

    return _write


@pytest.fixture
def write_operation(temp_dir):
    def _write(op, name="op.json"):
        return write_model(operation_to_file(op), temp_dir / name)

    return _write


@pytest.fixture
def write_channel(temp_dir):
    def _write(ch, name="channel.json"):
        return write_model(channel_to_file(ch), temp_dir / name)

    return _write


@pytest.fixture
def mock_logger():
    """Mock logger for testing."""
    logger = Mock()
    logger.info = Mock()
    logger.error = Mock()
    logger.warning = Mock()
    logger.debug = Mock()
    logger.exception = Mock()
    return logger
