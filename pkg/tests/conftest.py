import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from varweights.exponents import constant_profile, from_spec
from varweights.lattice import build_lattice

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lat1():
    return build_lattice(1, 1.0, 256)


@pytest.fixture(scope="session")
def lat2():
    return build_lattice(2, 1.0, 32)


@pytest.fixture(scope="session")
def p2(lat1):
    return constant_profile(lat1, 2.0)


@pytest.fixture(scope="session")
def p_var(lat1):
    return from_spec({"kind": "expr", "expr": "1.5 + 0.5*abs(x)/(1 + abs(x))", "p_infty": 2.0}, lat1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call":
                lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(". ")[0].split()[-1])):
            terminalreporter.write_line(line)
