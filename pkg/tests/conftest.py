import cmath
import sys

import numpy as np
import pytest

from a2loop.scalars import ModelParams

LAM = 0.83
OMEGA = cmath.exp(0.37j)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params2():
    return ModelParams(LAM, 2, omega=OMEGA)


def model(N, lam=LAM, omega=OMEGA, **kw):
    return ModelParams(lam, N, omega=omega, **kw)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    RESULTS = getattr(module, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k])
