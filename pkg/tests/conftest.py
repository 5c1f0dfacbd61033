import pytest

from cylbubble.constants import build_constant_table
from cylbubble.energy import Potentials
from cylbubble.exponents import ExponentSet, default_exponents
from cylbubble.ground_state import solve_ground_state


@pytest.fixture(scope="session")
def es():
    return default_exponents()


@pytest.fixture(scope="session")
def gs(es):
    return solve_ground_state(es)


@pytest.fixture(scope="session")
def scalar_gs():
    return solve_ground_state(ExponentSet(N=5, p=7 / 3, q=7 / 3))


@pytest.fixture(scope="session")
def table(gs, es):
    return build_constant_table(gs, es)


@pytest.fixture(scope="session")
def flat(es):
    return Potentials.flat(es)


@pytest.fixture(scope="session")
def pot(es):
    return Potentials.from_exponents(es)
