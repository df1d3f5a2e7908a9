import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polyperiodic.coefficients import CoeffFn, Equation

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def const_eq(n, omega, consts, leading=None):
    return Equation.from_constants(n, omega, consts, leading)


@pytest.fixture(scope="session")
def cubic():
    """z' = z**3 - 4z on a short horizon: equilibria -2, 0, 2."""
    return const_eq(3, 0.05, [0.0, -4.0, 0.0])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def trig_eq(n, omega, amp, rng):
    """Random real coefficients: constant plus one harmonic, each bounded by ``amp``."""
    coeffs = []
    for _ in range(n):
        c, a, b = rng.uniform(-amp / 2, amp / 2, 3) / np.array([1.0, 2.0, 2.0])
        coeffs.append(CoeffFn((float(c),), ((1, float(a), float(b)),), omega))
    return Equation(n, omega, tuple(coeffs))


TWO_PI = 2 * math.pi


# one summary line per acceptance criterion
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit:
        _CRITERIA[crit[0]] = (crit[1], "PASS" if report.outcome == "passed" else "FAIL")


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m:
        item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, verdict = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:>2} {verdict}  {title}")
