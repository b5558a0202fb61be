import pytest

_ACCEPTANCE = {}


def _record(criterion: str, passed: bool, detail: str):
    _ACCEPTANCE[criterion] = (passed, detail)
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for acceptance outcomes, echoed in the terminal summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int("".join(c for c in k if c.isdigit()) or 0), k)):
        passed, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")
