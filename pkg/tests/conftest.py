import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record the outcome of an acceptance criterion for the end-of-run summary."""
    def record(number: int, passed: bool, detail: str) -> None:
        _RESULTS[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
