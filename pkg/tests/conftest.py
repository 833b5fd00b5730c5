import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, collected by test_acceptance.py
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT, key=lambda k: int(k.split()[1])):
        terminalreporter.write_line(REPORT[key])
