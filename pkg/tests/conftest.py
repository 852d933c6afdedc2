"""Shared test plumbing: the acceptance-criteria summary block.

test_acceptance.py records one line per criterion through ``record``;
the terminal-summary hook prints them at the end of every run so the
pass/fail status of each criterion is visible even when stdout capture
is on.
"""

_ACCEPTANCE_LINES = []


def record(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
