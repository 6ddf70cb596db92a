import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from degenbeam.galerkin import GalerkinSystem
from degenbeam.model import ModelParams, Nonlinearity
from degenbeam.spectral import DomainSpec, build_spectrum

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def line():
    return DomainSpec(1, (math.pi,))


@pytest.fixture
def square():
    return DomainSpec(2, (math.pi, math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_system(n=16, kappa=1.0, gamma=1.0, q=1.0, coeffs=(0, 0, 0, 1), dim=1):
    dom = DomainSpec(1, (math.pi,)) if dim == 1 else DomainSpec(2, (math.pi, 2.0))
    return GalerkinSystem(build_spectrum(dom, n), ModelParams(kappa, gamma, q), Nonlinearity(coeffs))
