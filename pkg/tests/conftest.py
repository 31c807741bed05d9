import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bclab.processes import IIDFinite, IIDGeometric, MarkovChain

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

P_REF = [[0.9, 0.1], [0.2, 0.8]]


@pytest.fixture
def coin():
    return IIDFinite.uniform(2)


@pytest.fixture
def markov():
    return MarkovChain(np.array(P_REF))


@pytest.fixture
def geometric():
    return IIDGeometric(0.4)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    lines = request.config.acceptance_lines

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
