import hypothesis
import numpy as np
import pytest

from nullrec import ModelSpec, ParamVector

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("default")


@pytest.fixture
def spec_plain():
    """m = 0: principal direction only, sigma = 1."""
    return ModelSpec.from_names(1.0, "none")


@pytest.fixture
def spec_sinc():
    return ModelSpec.from_names(1.0, "sinc")


@pytest.fixture
def theta_zero():
    return ParamVector(0.0)


@pytest.fixture
def theta_sinc():
    return ParamVector(0.0, (0.3,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
