"""Shared pytest plumbing: a visible one-line verdict per acceptance check.

Acceptance tests report through `record_verdict` so every check contributes
exactly one PASS/FAIL line to the terminal summary, visible without -s even
when the assertions themselves pass.
"""
from __future__ import annotations

import pytest

_VERDICT_LINES: list[str] = []


@pytest.fixture(scope="session")
def record_verdict():
    def _record(name: str, passed: bool, detail: str) -> None:
        _VERDICT_LINES.append(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICT_LINES:
        return
    terminalreporter.section("acceptance checks")
    for line in _VERDICT_LINES:
        terminalreporter.write_line(line)
