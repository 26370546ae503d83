import numpy as np
import pytest
from hypothesis import settings

from shearframe.windows import WindowParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def desk():
    return WindowParams(lam=2.0, t=0.5, rho=1.0, eps=0.3, eps0=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
