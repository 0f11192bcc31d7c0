import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def binary_entropy(p):
    return -p * np.log(p) - (1 - p) * np.log(1 - p)


def bsc(eps):
    return np.array([[1 - eps, eps], [eps, 1 - eps]])


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one pass/fail line for the terminal summary; also prints it."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _report(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        print(line)
        lines.append(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].split(".")[0])):
            terminalreporter.write_line(line)
