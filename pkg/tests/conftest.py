import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Collects ``(criterion, passed, detail)`` lines printed after the run."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
