"""Collects the one-line verdicts of the acceptance checks and prints them at the end."""

import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """Call ``verdict(label, ok, detail)`` once per check; the line is printed in the summary."""
    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
