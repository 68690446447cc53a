import numpy as np
import pytest

from tgbo.gp import Dataset
from tgbo.kernels import KernelParams


def random_dataset(rng, n, d, spread=1.0):
    X = rng.uniform(0.0, spread, size=(n, d))
    y = rng.normal(size=n)
    return Dataset(X, y)


def random_params(rng, d):
    return KernelParams(rng.uniform(0.5, 2.0), rng.uniform(0.3, 3.0, size=d))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
