import pytest

_REPORT = []


@pytest.fixture
def report():
    """Record (and print) one PASS/FAIL line for an acceptance criterion."""

    def _record(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
        _REPORT.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
