import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def report_criterion(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, [])

    def _report(number, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
