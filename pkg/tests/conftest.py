import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """``report(n, title, ok, detail)``: print one PASS/FAIL line for criterion ``n`` and assert it."""

    def _report(n, title, ok, detail=""):
        line = f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
