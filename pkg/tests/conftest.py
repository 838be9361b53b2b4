"""Shared fixtures for the tanpq test suite."""

import math

import pytest
from scipy import optimize

from tanpq.core.family import FamilyParams


@pytest.fixture
def p11():
    return FamilyParams(p=1, q=1)


@pytest.fixture
def p21():
    return FamilyParams(p=2, q=1)


@pytest.fixture
def p12():
    return FamilyParams(p=1, q=2)


@pytest.fixture
def p23():
    return FamilyParams(p=2, q=3)


@pytest.fixture(scope="session")
def y_star():
    """Positive root of y = 2 tanh(y): the fixed point i*y_star of 2 tan(z)."""
    return optimize.brentq(lambda y: y - 2.0 * math.tanh(y), 1.0, 3.0, xtol=1e-15)
