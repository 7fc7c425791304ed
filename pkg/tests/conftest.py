import numpy as np
import pytest

from gaussian_teleport.core import build_example_channel, build_symmetric_channel, EXAMPLE1_PARAMS, EXAMPLE2_PARAMS

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Record one pass/fail line per acceptance criterion, printed at the end of the run."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, text, passed):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def example1():
    return build_example_channel(*EXAMPLE1_PARAMS)


@pytest.fixture(scope="session")
def example2():
    return build_example_channel(*EXAMPLE2_PARAMS)


@pytest.fixture(scope="session")
def symmetric_half():
    return build_symmetric_channel(0.5)
