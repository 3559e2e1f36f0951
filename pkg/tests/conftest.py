import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def S():
    from fractop.library import sierpinski
    return sierpinski()


@pytest.fixture
def K():
    from fractop.library import k_alpha
    return k_alpha(0.25)


# acceptance summary: one line per criterion at the end of the run ----------------

ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    if hasattr(rep, "wasxfail"):
        status = "FAIL (recorded conflict)"
    else:
        status = "PASS" if rep.passed else "FAIL"
    ACCEPTANCE.append((mark.args[0], mark.args[1], status))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, status in sorted(ACCEPTANCE, key=lambda t: (t[0], t[1])):
        terminalreporter.write_line("criterion %2d: %s  %s" % (number, status, label))
