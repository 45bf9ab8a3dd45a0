import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from resonant_gt.phasor import random_state
from resonant_gt.rng import Xoshiro256

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance lines collected during the run, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_collection_modifyitems(config, items):
    # reference solvers are exercised before anything that relies on them
    def rank(item):
        name = Path(str(item.fspath)).name
        if name == "test_oracle.py":
            return 0
        if name == "test_acceptance.py":
            return 2
        return 1

    items.sort(key=rank)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rng():
    return Xoshiro256(1234)


def phase_error(phi):
    phi = np.asarray(phi)
    return np.minimum(np.abs(phi - math.pi / 2), np.abs(phi + math.pi / 2))


def make_state(n, seed, groups=None):
    return random_state(n, Xoshiro256(seed), groups)
