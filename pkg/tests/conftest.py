import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; returns the verdict for use in ``assert``."""

    def record(label, passed, detail=""):
        mark = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{mark}] {label}" + (f"  ({detail})" if detail else ""))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
