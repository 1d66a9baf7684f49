"""Shared fixtures."""

from fractions import Fraction

import numpy as np
import pytest
from click.testing import CliRunner

from isopurity.coulomb import init_chain


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain_state():
    """Small unbalanced chain away from beta = 0 so every term of the weight matters."""
    return init_chain(n=10, beta=1.3, mu=Fraction(1, 2), seed=7)


@pytest.fixture
def runner():
    return CliRunner()
