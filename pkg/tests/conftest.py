import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from paraproduct_lab.sequences import random_sequence

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_sequences(draw, max_depth=2, max_size=6):
    """Random sparse sequence plus a depth that covers it."""
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    depth = draw(st.integers(0, max_depth))
    size = draw(st.integers(1, max_size))
    return random_sequence(rng, depth, size), depth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
