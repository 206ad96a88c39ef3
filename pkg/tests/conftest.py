"""Shared fixtures and the acceptance-criterion summary hook.

Acceptance tests register one line per criterion through record_criterion;
pytest_terminal_summary prints them after the run so the pass/fail status
of each criterion is visible even though pytest captures stdout.
"""

from __future__ import annotations

_CRITERION_LINES: dict[int, str] = {}


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number:2d} {name}: {status}"
    if detail:
        line += f" ({detail})"
    _CRITERION_LINES[number] = line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])
