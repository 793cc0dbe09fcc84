import pytest

from inexact_sesop.problems import generate_quadratic

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def quad20():
    return generate_quadratic(20, 3)


@pytest.fixture(scope="session")
def quad50():
    return generate_quadratic(50, 7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
