import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cfbkit.cfb import build_cfb
from cfbkit.kernels import lambda_kernel
from cfbkit.symbols import AnalyticSymbol

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def family_operator(root, mult, scale=1.0, N=16, lams=(1, 2, 3)):
    """Three blocks with ``scale * (z - root)^mult`` on both superdiagonals."""
    phi = AnalyticSymbol.from_roots([root] * mult, scale)
    return build_cfb([lambda_kernel(l) for l in lams], [phi, phi], N=N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def similar_pair():
    return family_operator(0.5, 2), family_operator(0.5, 2, scale=3.0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
