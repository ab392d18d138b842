"""
Shared fixtures for the test suite.
"""
import numpy as np
import pytest

from core.protocol import ProtocolParams, run_protocol


@pytest.fixture(scope="session")
def flagship():
    """vA = 3/2, vB = 2, x = 1.041."""
    return ProtocolParams.flagship()


@pytest.fixture(scope="session")
def flagship_report(flagship):
    return run_protocol(flagship, with_measurement=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
