from __future__ import annotations

import pytest

_ACCEPTANCE: list[str] = []


class AcceptanceRecorder:
    def __call__(self, criterion: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {criterion:>2} [{'PASS' if passed else 'FAIL'}] {title}"
        if detail:
            line += f" -- {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed


@pytest.fixture
def acceptance() -> AcceptanceRecorder:
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
