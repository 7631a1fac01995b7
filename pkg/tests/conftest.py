import time
from contextlib import contextmanager

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Time a block of checks and record one PASS/FAIL line for it."""

    @contextmanager
    def check(number, description, budget):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            elapsed = time.perf_counter() - start
            assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
            status = "PASS"
        finally:
            line = f"[{status}] criterion {number:>2}: {description} ({time.perf_counter() - start:.2f} s)"
            _LINES.append(line)
            print(line)

    return check


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
