import numpy as np
import pytest

from slipflow.conformal import ConformalMap

MAPS = {
    "identity": ConformalMap("identity"),
    "moebius": ConformalMap("moebius", a=0.3 + 0.2j),
    "quadratic": ConformalMap("quadratic", c=0.3),
    "cubic": ConformalMap("cubic", c=0.25),
}


@pytest.fixture(params=list(MAPS), ids=list(MAPS))
def cmap(request):
    return MAPS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def disc_points(rng, n, r_max=0.9):
    r = r_max * np.sqrt(rng.uniform(0, 1, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
