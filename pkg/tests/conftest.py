import numpy as np
import pytest

from snakeopt.benchlab import Instance
from snakeopt.estimator import WeightTable
from snakeopt.genmodel import GenerativeSpec
from snakeopt.topology import load_sycamore68


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical checks")


@pytest.fixture(scope="session")
def inst3():
    return Instance.simulate(3, seed=0)


@pytest.fixture(scope="session")
def est3(inst3):
    return inst3.estimator(WeightTable.reference())


@pytest.fixture(scope="session")
def inst68():
    return Instance.from_spec(GenerativeSpec(load_sycamore68(), seed=0))


@pytest.fixture(scope="session")
def est68(inst68):
    return inst68.estimator(WeightTable.reference())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(n: int, ok: bool, detail: str):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
