import pytest

from biphoton import FrequencyGrid, PhysicalParams, derive

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def derived(params):
    return derive(params)


@pytest.fixture(scope="session")
def grid256():
    return FrequencyGrid(400.0, 256)


@pytest.fixture(scope="session")
def grid512():
    return FrequencyGrid(400.0, 512)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
