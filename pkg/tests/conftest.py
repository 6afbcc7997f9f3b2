"""Collects one verdict line per acceptance criterion and prints them at the end."""

import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number: int, name: str, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (name, bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {name}: {detail}")
