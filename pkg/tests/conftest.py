import pytest

_RESULTS: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion: ``criterion(n, title, passed, detail)``."""
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        _RESULTS[number] = (bool(passed), title, detail)
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        passed, title, detail = _RESULTS[n]
        terminalreporter.write_line(
            f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
