import numpy as np
import pytest

from fluxgates import CircuitParams
from fluxgates.effective import find_off_position

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion checked by the test")
    config.addinivalue_line("markers", "slow: long-running full-model simulation")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "criterion", None)
    if crit is not None:
        ACCEPTANCE.setdefault(crit, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (n, text), outcomes in sorted(ACCEPTANCE.items()):
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        tr.write_line(f"criterion {n}: {status}  {text}")


@pytest.fixture(scope="session")
def params():
    return CircuitParams.reference()


@pytest.fixture(scope="session")
def off_effective(params):
    return find_off_position(params, "effective")


@pytest.fixture(scope="session")
def off_exact(params):
    return find_off_position(params, "exact")


@pytest.fixture(scope="session")
def driven(params, off_exact):
    from fluxgates.dynamics import build_driven_system
    return build_driven_system(params, off_exact, 54)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
