import numpy as np
import pytest

from phonon_bell.config import RunConfig
from phonon_bell.modespace import build_mode_space


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def space3():
    return build_mode_space([3, 3, 3, 3])


@pytest.fixture(scope="session")
def params(cfg):
    return cfg.system_params()


@pytest.fixture
def rng():
    return np.random.default_rng(7)
