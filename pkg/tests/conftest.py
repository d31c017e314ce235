import numpy as np
import pytest

from dpssvolt.laguerre import build_basis, load_system
from dpssvolt.slepian import DpssParams, generate_dpss


@pytest.fixture(scope="session")
def basis():
    return build_basis()


@pytest.fixture(scope="session")
def null_spec():
    return load_system("null")


@pytest.fixture(scope="session")
def alternate_spec():
    return load_system("alternate")


@pytest.fixture(scope="session")
def dpss_200_5():
    return generate_dpss(DpssParams(200, 5.0, 6))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, shown after the test session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def report_criterion():
    """Record and print the PASS/FAIL line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record
