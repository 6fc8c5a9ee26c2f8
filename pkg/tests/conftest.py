import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def record_acceptance():
    """Print and keep one pass/fail line per acceptance criterion."""

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {number:2d} {name}: {'PASS' if passed else 'FAIL'} ({detail})"
        print(line)
        _ACCEPTANCE.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
