import math

import pytest

from adiabatic_search.model import PathSpec
from adiabatic_search.scheduler import ProblemSpec, synthesize


@pytest.fixture(scope="session")
def sched_cache():
    """Synthesized schedules keyed by (N, A, eps); synthesis is cheap but shared."""
    cache = {}

    def get(N, A, eps):
        key = (N, float(A), eps)
        if key not in cache:
            cache[key] = synthesize(ProblemSpec(PathSpec.quadratic(N, A), eps))
        return cache[key]

    return get


def sqrt_n(N):
    return math.sqrt(N)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get(
        "tests.test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
