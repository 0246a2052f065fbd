import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> list of (ok, detail), filled in by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def record():
    def _record(criterion: int, ok: bool, detail: str) -> None:
        ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
        print(f"acceptance {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        tr.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
