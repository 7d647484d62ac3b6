import sys
from pathlib import Path

import pytest

from profit_landscape.market_data import load_series

DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def fixture_path():
    return DATA / "fixture.csv"


@pytest.fixture(scope="session")
def fixture_series(fixture_path):
    return load_series(fixture_path)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, ok, detail, status=None):
        status = status or ("PASS" if ok else "FAIL")
        line = f"criterion {number:>2}: {status}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
