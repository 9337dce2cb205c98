import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def bsc(delta):
    return np.array([[1 - delta, delta], [delta, 1 - delta]])


def shifted_bsc(delta):
    """Two rows that share the last two outputs, mirrored."""
    return np.array([[0.0, 0.0, 1 - delta, delta], [0.0, 0.0, delta, 1 - delta]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
