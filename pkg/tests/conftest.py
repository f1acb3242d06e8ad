import re
import time

import pytest

from fcboost.estimator import EstimatorGains
from fcboost.sim import (
    ADAPTIVE,
    POLICY_ADAPTIVE,
    Scenario,
    nominal_gains,
    nominal_params,
    run_scenario,
    scenario1,
    scenario2,
    scenario3,
)


def timed_run(sc):
    t0 = time.perf_counter()
    trace = run_scenario(sc)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def scenario1_run():
    return timed_run(scenario1())


@pytest.fixture(scope="session")
def scenario2_run():
    return timed_run(scenario2())


@pytest.fixture(scope="session")
def scenario3_run():
    return timed_run(scenario3(10.0))


@pytest.fixture(scope="session")
def scenario3_slow_run():
    return timed_run(scenario3(0.01))


@pytest.fixture(scope="session")
def scenario3_startup_run():
    """First 30 ms of the adaptive startup, sampled every microsecond.

    Dense sampling keeps the trapezoid quadrature of the estimator-error
    oracle accurate through the fast transient; no load event.
    """
    sc = Scenario(
        name="scenario3-startup",
        params=nominal_params(),
        gains=nominal_gains(),
        x0=(40.0, 10.0, 30.0),
        xc0=0.0,
        setpoints=[(0.0, 40.0)],
        duration=0.03,
        mode=ADAPTIVE,
        policy=POLICY_ADAPTIVE,
        est_gains=EstimatorGains(k1=10.0, k2=10.0),
        theta_hat0=(0.0, 0.0),
        step=1e-8,
        decimation=100,
    )
    return timed_run(sc)


_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            m = _CRITERION.search(rep.nodeid)
            if not m:
                continue
            num = int(m.group(1))
            ok = outcome == "passed"
            prev_ok, count = lines.get(num, (True, 0))
            lines[num] = (prev_ok and ok, count + 1)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        ok, count = lines[num]
        status = "PASS" if ok else "FAIL"
        suffix = f" ({count} checks)" if count > 1 else ""
        terminalreporter.write_line(f"criterion {num}: {status}{suffix}")
