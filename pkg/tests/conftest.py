import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cjacobi import PeriodicPair

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def free_base():
    return PeriodicPair((1.0,), (0.0,))
