import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from ensemblage.states import density_from_pure, ket, random_density

settings.register_profile(
    "default", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=4)


@pytest.fixture
def zero():
    return density_from_pure(ket(1, 0))


@pytest.fixture
def one():
    return density_from_pure(ket(0, 1))


@pytest.fixture
def plus():
    return density_from_pure(ket(1, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_states(rng, dim, n):
    return [random_density(dim, int(rng.integers(1, dim + 1)), rng) for _ in range(n)]
