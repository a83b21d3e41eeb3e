import numpy as np
import pytest

from msetarx import SimulationConfig, make_dgp, simulate_msetarx

# Seed used by every full-scale DGP1 check (the seed named for `reproduce`).
DGP1_SEED = 1
DGP1_T = 50_000


@pytest.fixture(scope="session")
def dgp1():
    return make_dgp("dgp1")


@pytest.fixture(scope="session")
def dgp2():
    return make_dgp("dgp2")


@pytest.fixture(scope="session")
def dgp1_sim(dgp1):
    return simulate_msetarx(dgp1, SimulationConfig(n_samples=DGP1_T, seed=DGP1_SEED))


@pytest.fixture(scope="session")
def dgp1_truth(dgp1):
    return np.array([dgp1.theta(J) for J in dgp1.partition.regimes()])


# One line per acceptance check, printed after the run (see test_acceptance.py).
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
