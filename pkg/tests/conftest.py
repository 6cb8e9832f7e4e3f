import re

import pytest

_LINES = {}


@pytest.fixture
def report():
    """``report(criterion, ok, detail)`` records one acceptance line."""

    def record(criterion, ok, detail):
        _LINES[criterion] = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        print(_LINES[criterion])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        terminalreporter.write_line(_LINES[key])
