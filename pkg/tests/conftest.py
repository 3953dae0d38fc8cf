"""Shared pytest plumbing.

The acceptance tests record one summary line each; the terminal-summary hook
echoes them as a block at the end of the run so the per-criterion verdicts
are visible even when pytest captures stdout.
"""

import pytest

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion_log():
    return _criterion_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _criterion_lines:
        terminalreporter.write_line(line)
