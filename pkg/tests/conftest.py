import math

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail=""):
    """Log one PASS/FAIL line and print it immediately (visible with -s)."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


TRITTER_TRUTH = (0.81, 0.51)
FOURPORT_TRUTH = (0.377, 0.07 * math.pi)
