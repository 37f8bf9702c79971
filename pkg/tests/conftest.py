import numpy as np
import pytest

from rrdual.numerics import RngStream

CI_SEED = 20240917


@pytest.fixture
def stream():
    return RngStream(CI_SEED, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(CI_SEED)

# filled by test_acceptance; echoed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
