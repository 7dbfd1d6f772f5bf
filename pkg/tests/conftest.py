import math

import numpy as np
import pytest

from contact_hj.model import GridFunction, make_grid, toy_model
from contact_hj.semigroup import default_step_params

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid2048():
    return make_grid(2048)


@pytest.fixture(scope="session")
def figure_cases():
    """Both pipelines at the three figure levels (n = 2048, delta = 1e-3), with timings."""
    from contact_hj.cli import RunConfig, figure_case

    cfg = RunConfig()
    return {c: figure_case(cfg, c) for c in (0.8, 1.0, 2.0)}


def toy_setup(c, n=256, delta=1e-3, **kw):
    g = make_grid(n)
    m = toy_model(c)
    return g, m, default_step_params(m, g, delta, **kw)


def sin_on(grid):
    return GridFunction.from_callable(grid, np.sin)


HALF_PI = math.pi / 2
