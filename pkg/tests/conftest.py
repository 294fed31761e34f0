import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isingobs.core import Point2D
from isingobs.formfactors import EvenTerminating, OddTower
from isingobs.laurent import PowerSumTower, SymmetricLaurentPolynomial
from isingobs.testfunctions import BumpFunction

settings.register_profile(
    "isingobs",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("isingobs")


@pytest.fixture
def rng():
    return np.random.default_rng(0x15151)


@pytest.fixture
def bump():
    return BumpFunction(Point2D(0.0, 0.0), 0.3)


@pytest.fixture
def small_bump():
    # off-centre so that phases do not cancel by symmetry
    return BumpFunction(Point2D(0.02, 0.05), 0.25)


def even_family(k, g, r=0.5):
    poly = SymmetricLaurentPolynomial(2 * k, (((1,), 1.0), ((2, -1), 0.5 + 0.2j)))
    return EvenTerminating(k, poly, g, r)


@pytest.fixture
def even1(bump):
    return even_family(1, bump)


@pytest.fixture
def odd(bump):
    return OddTower(PowerSumTower(0), bump, 0.5)
