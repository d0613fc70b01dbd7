import numpy as np
import pytest

from anchorfim.config import RunConfig
from anchorfim.harness import build_scenario
from anchorfim.signal import Regime


@pytest.fixture
def ref_config():
    return RunConfig()


@pytest.fixture
def near_scenario(ref_config):
    return build_scenario(ref_config, regime=Regime.NEAR)


@pytest.fixture
def far_scenario(ref_config):
    return build_scenario(ref_config, regime=Regime.FAR)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS

    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
