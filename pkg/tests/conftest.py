import pytest

# criterion number -> list of (ok, detail) collected by the acceptance tests
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(("" if ok else "[x] ") + d for ok, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {details}")
