import pytest

from kacspec.kernel import CrossSectionParams, build_tables

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def tables_half():
    """Tables at s = 1/2 covering 64 modes and 4096 eigenvalues."""
    return build_tables(64, CrossSectionParams(0.5), n_lambda=4096)


@pytest.fixture(scope="session")
def tables_small():
    return build_tables(16, CrossSectionParams(0.5))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
