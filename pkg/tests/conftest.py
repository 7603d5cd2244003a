import numpy as np
import pytest

from axishock.admissibility import NozzleSpec, Profile, pe_prefactor
from axishock.gas import GasParameters, normal_shock_pair
from axishock.rankine_hugoniot import kdot

Z3 = [0.0, 0.0, 0.0, 1.0]


def z3_pe_constant(pair, z0, L=1.0):
    """Constant exit pressure placing the shock of the z^3 nozzle at z0."""
    k = kdot(pair)
    R = L**4 / 4.0 - k * z0**4 / 4.0
    return 2.0 * R / pe_prefactor(pair)


def z3_spec(pair, sigma, z0=0.5, L=1.0):
    c = z3_pe_constant(pair, z0, L)
    return NozzleSpec(L, sigma, Profile.polynomial(Z3), Profile.constant(c)).validate()


@pytest.fixture
def gas():
    return GasParameters()


@pytest.fixture
def pair(gas):
    return normal_shock_pair(2.0, 1.0, 1.0, gas)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
