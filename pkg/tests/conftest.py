"""Shared fixtures; the acceptance summary is printed at the end of the run."""
import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """report(k, passed, detail) records the one-line outcome of criterion k."""

    def _report(k: int, passed: bool, detail: str):
        line = f"ACCEPTANCE {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[k] = line
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
