import pytest

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
CRITERIA = {}


@pytest.fixture
def record():
    def _record(cid, passed, detail):
        CRITERIA[cid] = (bool(passed), detail)
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        ok, detail = CRITERIA[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
