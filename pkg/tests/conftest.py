import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion_report():
    """Collects one PASS/FAIL line per acceptance criterion."""

    def report(name, passed, detail=""):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
