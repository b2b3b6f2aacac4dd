"""Shared fixtures: small networks reused across the test modules."""

import pytest

from excitonfim import chain_config, square_config


@pytest.fixture(scope="session")
def square():
    """Four sites on a 1 nm square, default parameters."""
    return square_config(1.0)


@pytest.fixture(scope="session")
def chain3nm():
    """Degenerate four-site chain with 3 nm nearest-neighbour spacing."""
    return chain_config(4, 3.0)


@pytest.fixture(scope="session")
def pair1nm():
    """Two degenerate sites 1 nm apart (coupling 80 meV)."""
    return chain_config(2, 1.0)
