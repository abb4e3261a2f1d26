import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance line and assert on it."""
    def _record(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}"
        print(line)
        _RESULTS.append((number, name, bool(ok), detail))
        assert ok, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_RESULTS):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}")
