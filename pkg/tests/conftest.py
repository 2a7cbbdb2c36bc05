"""Shared pytest plumbing: one-line acceptance verdicts.

Acceptance tests record a `[criterion NN] PASS/FAIL: detail` line before
asserting, so the terminal summary carries one line per criterion even when
a criterion fails.
"""

import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(num: int, passed: bool, detail: str) -> bool:
        _LINES.append(
            f"[criterion {num:02d}] {'PASS' if passed else 'FAIL'}: {detail}"
        )
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
