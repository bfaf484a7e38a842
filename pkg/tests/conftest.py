import numpy as np
import pytest

from soilnpk import phantom


@pytest.fixture(scope="session")
def synthetic_table():
    """The default 231-row phantom table at 1% noise, seed 0."""
    return phantom.generate_dataset(noise_sd=0.01, seed=0)


@pytest.fixture(scope="session")
def clean_table():
    return phantom.generate_dataset(noise_sd=0.0, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
