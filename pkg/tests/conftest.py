import copy

import numpy as np
import pytest

from hptopt.config import RunConfig, default_config
from hptopt.harness import build_config_scenario


@pytest.fixture(scope="session")
def full_config() -> RunConfig:
    return default_config()


@pytest.fixture(scope="session")
def reduced_config() -> RunConfig:
    """CI profile: 200 s at dt = 0.05 with a coarse calibration grid."""
    raw = copy.deepcopy(default_config().raw)
    raw["sim"]["duration"] = 200.0
    raw["sim"]["dt"] = 0.05
    raw["region"]["calibration"] = {"n_ap": 5, "n_hpa": 8}
    return RunConfig(raw=raw)


@pytest.fixture(scope="session")
def full_scenario(full_config):
    return build_config_scenario(full_config)


@pytest.fixture(scope="session")
def reduced_scenario(reduced_config):
    return build_config_scenario(reduced_config)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
