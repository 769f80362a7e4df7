"""Shared fixtures: acceptance-criterion verdict reporting.

The acceptance tests record one PASS/FAIL line each; the lines are
replayed as a terminal section after the run so they are visible even
under pytest's default output capture.
"""

import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record and assert one acceptance-criterion verdict."""

    def _record(number: int, title: str, ok: bool, detail: str) -> None:
        line = (
            f"criterion {number:02d} {'PASS' if ok else 'FAIL'} {title}: {detail}"
        )
        _VERDICTS.append(line)
        print("\n" + line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
