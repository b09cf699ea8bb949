import numpy as np
import pytest

from czlab._fastops import set_threads
from czlab.geometry import cantor_measure, halfplane_scenario, lipschitz_scenario, random_slopes
from czlab.measures import DiscreteMeasure


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


@pytest.fixture(autouse=True, scope="session")
def _threads():
    set_threads(None)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cantor2():
    return cantor_measure(2)


@pytest.fixture(scope="session")
def cantor3():
    return cantor_measure(3)


@pytest.fixture(scope="session")
def halfplane1():
    return halfplane_scenario(64, 48, 32, seed=1)


@pytest.fixture(scope="session")
def lipschitz3():
    return lipschitz_scenario(random_slopes(4, 3), (64, 48, 32), seed=3)


@pytest.fixture
def segment1000():
    x = (np.arange(1000) + 0.5) / 1000
    return DiscreteMeasure(np.c_[x, np.zeros(1000)], np.full(1000, 1e-3))
