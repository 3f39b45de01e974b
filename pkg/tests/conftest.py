import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spheredyn.library import ChainPendulumParams, chain_pendulum, modulated_inertia_model

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def double_pendulum():
    return chain_pendulum(ChainPendulumParams((1.0, 1.0), (1.0, 1.0), 9.81))


@pytest.fixture(scope="session")
def modulated():
    return modulated_inertia_model(ChainPendulumParams((1.0, 2.0), (1.0, 0.7), 9.81), alpha=0.3)


@pytest.fixture(scope="session")
def triple_chain():
    return chain_pendulum(ChainPendulumParams((1.0, 0.8, 0.5), (0.6, 0.5, 0.4), 9.81))
