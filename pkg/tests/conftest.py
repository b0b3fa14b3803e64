import pytest

_ACCEPTANCE: list = []


@pytest.fixture
def acceptance_log():
    """Record one line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, title: str, passed: bool, seconds: float, detail: str = ""):
        _ACCEPTANCE.append((number, title, passed, seconds, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, seconds, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {title} ({seconds:.2f} s)"
        if detail:
            line += f" | {detail}"
        terminalreporter.write_line(line)

