import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", "25")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def k0():
    from gausscurv.curvature import make_k0

    return make_k0(3.0, 2.0, 6)


@pytest.fixture(scope="session")
def solutions():
    """Lazily computed, shared solver runs keyed by (name, alpha)."""
    from gausscurv.curvature import ExactFamily, RadialPower, make_k0
    from gausscurv.solver import picard_solve

    cache = {}
    fields = {"exact": ExactFamily, "rp4": lambda a: RadialPower(4.0), "k0": lambda a: make_k0(3.0, 2.0, 6)}

    def get(name, alpha):
        key = (name, alpha)
        if key not in cache:
            cache[key] = picard_solve(fields[name](alpha), alpha)
        return cache[key]

    return get


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
