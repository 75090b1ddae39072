import pytest

_VERDICTS = []


@pytest.fixture(scope="session")
def verdicts():
    """Collects the one-line PASS/FAIL verdicts of the acceptance criteria."""
    return _VERDICTS


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
