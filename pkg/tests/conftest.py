import numpy as np
import pytest

from aglakit.frame import GaborSystem, nuttall_window


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny(rng):
    """L=16, hop 4, 8 channels, random positive 8-tap window."""
    return GaborSystem(rng.uniform(0.2, 1.0, 8), hop=4, n_channels=8, signal_len=16)


@pytest.fixture(scope="session")
def paper_frame():
    return GaborSystem(nuttall_window(256), hop=32, n_channels=256, signal_len=4096)


@pytest.fixture(scope="session")
def small_frame():
    """Cheap frame for iteration-heavy tests."""
    return GaborSystem(nuttall_window(64), hop=8, n_channels=64, signal_len=512)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line PASS/FAIL verdict for the terminal summary."""

    def _report(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
