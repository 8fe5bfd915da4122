import numpy as np
import pytest

from empldp.cdf_model import ContinuousCDF


@pytest.fixture
def uniform():
    return ContinuousCDF.uniform()


@pytest.fixture
def square():
    return ContinuousCDF.power(2.0)


@pytest.fixture(params=["uniform", "pow:2", "pwl:0.4:0.3,0.7:0.8"])
def family(request):
    from empldp.cdf_model import parse_dist
    return parse_dist(request.param)


def smooth_paths(rng, grid, count, amplitude=0.3):
    """Random smooth paths vanishing at 0: short sine series."""
    k = np.arange(1, 5)
    out = []
    for _ in range(count):
        a = rng.normal(0.0, amplitude / k)
        out.append(np.sum(a[:, None] * np.sin(np.pi * k[:, None] * grid[None, :]), axis=0))
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
