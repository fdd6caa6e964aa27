import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from circlewalk.scenarios import build_scenario

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, passed, detail)``."""

    def record(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 13):
        passed, detail = ACCEPTANCE.get(number, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def scenario():
    cache = {}

    def get(name, seed=0):
        if (name, seed) not in cache:
            cache[name, seed] = build_scenario(name, seed)
        return cache[name, seed]

    return get


@pytest.fixture
def grid1024():
    return np.arange(1024) / 1024
