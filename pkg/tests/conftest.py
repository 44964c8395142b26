import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for an acceptance criterion; printed in the terminal summary."""

    def record(number, passed, detail):
        _criteria[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(_criteria[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_criteria):
            terminalreporter.write_line(_criteria[number])
