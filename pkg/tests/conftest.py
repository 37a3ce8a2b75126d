import numpy as np
import pytest

from sp8d import beq, modem


@pytest.fixture(scope="session")
def pb4():
    return beq.load_format("pb4b8d")


@pytest.fixture(scope="session")
def pb5():
    return beq.load_format("pb5b8d")


@pytest.fixture(scope="session")
def pb6():
    return beq.load_format("pb6b8d")


@pytest.fixture(scope="session")
def pa7():
    return beq.load_format("pa7b8d")


@pytest.fixture(scope="session")
def all_formats(pb4, pb5, pb6, pa7):
    return [pb4, pb5, pb6, pa7]


@pytest.fixture(scope="session")
def toy():
    """Single-parity toy format b2 = b1."""
    return beq.parse_format("format toy\nbits 2\ninfo 1\nparity b2 = b1\n")


@pytest.fixture(scope="session")
def codebooks(all_formats):
    return {spec.name: modem.build_codebook(spec) for spec in all_formats}


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion verdicts after the test summary."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
