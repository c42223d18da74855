# tests/conftest.py
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from hypersolve import Grid  # noqa: E402
from problem import make_problem  # noqa: E402

# One-sided reference: observed at x = 0 (Dirichlet), reflecting Neumann end at x = L.
ONE_SIDED = {
    "catalog": "linear-unit",
    "phi": "0.05*sin(pi*x/2)",
    "bc_right": {"kind": "neumann", "h": "0"},
}
# Two-sided reference: the catalog defaults, Dirichlet at both ends.
TWO_SIDED = {"catalog": "linear-unit"}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full forward + sideways + backward pipelines")


@pytest.fixture
def linear():
    return make_problem(TWO_SIDED)


@pytest.fixture
def one_sided():
    return make_problem(ONE_SIDED)


@pytest.fixture
def one_sided_grid(one_sided):
    return Grid(one_sided.t0, one_sided.t0 + 2.2, 200, 800, one_sided.L)


@pytest.fixture
def two_sided_grid(linear):
    return Grid(linear.t0, linear.t0 + 1.2, 200, 400, linear.L)
