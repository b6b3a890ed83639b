import math

import pytest
from hypothesis import HealthCheck, settings

from collarspec.metric import CollarConfig, FiberSpectrum, make_profile

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

MU1 = (2 * math.pi) ** 2

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def hyperbolic():
    """The benchmark collar: rho = sqrt(eps^2 + t^2), a=-1, b=d=1, I=[-1,1],
    unit circle fiber."""
    return CollarConfig(-1, 1, 1, (-1.0, 1.0), make_profile("hyperbolic"),
                        FiberSpectrum.circle(1.0))


@pytest.fixture(scope="session")
def linear_pair():
    return CollarConfig(-1, 1, 2, (-1.0, 1.0), make_profile("linear-pair", (2.0, 1.0)),
                        FiberSpectrum.flat_torus((1.0, 1.0)))


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one ``CRITERION n: PASS|FAIL ...`` line and echo it."""
    def record(n, ok, detail):
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
