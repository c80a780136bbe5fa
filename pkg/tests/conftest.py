import numpy as np
import pytest

from bikdv import make_grid
from bikdv.analysis import lambda_threshold
from bikdv.ground import solve_scalar_ground


@pytest.fixture(scope="session")
def line_grid():
    return make_grid("line", 2048, 40.0)


@pytest.fixture(scope="session")
def radial_grid():
    return make_grid("radial", 1024, 30.0, 3)


@pytest.fixture(scope="session")
def small_line():
    return make_grid("line", 256, 20.0)


@pytest.fixture(scope="session")
def small_radial():
    return make_grid("radial", 256, 20.0, 3)


@pytest.fixture(scope="session")
def v2_line(line_grid):
    V, rep = solve_scalar_ground(1.0, line_grid)
    assert rep.converged
    return V, rep


@pytest.fixture(scope="session")
def v2_radial(radial_grid):
    V, rep = solve_scalar_ground(1.0, radial_grid)
    assert rep.converged
    return V, rep


@pytest.fixture(scope="session")
def lam_line(line_grid, v2_line):
    return lambda_threshold(line_grid, 1.0, v2_line[0])


@pytest.fixture(scope="session")
def lam_radial(radial_grid, v2_radial):
    return lambda_threshold(radial_grid, 1.0, v2_radial[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_random(g, rng, amp=1.0, width=None):
    """Localized smooth random profile: a few random Gaussians."""
    x = g.nodes
    width = width or g.extent / 10
    f = np.zeros(g.n)
    for _ in range(3):
        c = rng.uniform(-0.3, 0.3) * g.extent if g.kind == "line" else 0.0
        w = width * rng.uniform(0.5, 1.5)
        f += rng.normal() * np.exp(-(((x - c) / w) ** 2))
    return amp * f


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
