from pathlib import Path

import pytest
from hypothesis import settings

# fixed example sequence so every run checks the same cases
settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def extraction_text() -> str:
    return (FIXTURES / "extraction_answer.txt").read_text(encoding="utf-8")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record one summary line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
