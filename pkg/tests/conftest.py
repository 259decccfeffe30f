import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption("--test-seed", type=int, default=20240611,
                     help="seed for randomized test sampling")


@pytest.fixture
def rng(request):
    return np.random.default_rng(request.config.getoption("--test-seed"))


CRITERION_LINES: list = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line, then return the boolean."""
    def _record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        CRITERION_LINES.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
