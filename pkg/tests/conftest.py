import numpy as np
import pytest

from obsreg.spectral_core import TorusConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def torus16():
    return TorusConfig(2 * np.pi, 16)


@pytest.fixture
def torus8_unit():
    return TorusConfig(1.0, 8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
