import math

import pytest
from hypothesis import settings

from omarray.model import SystemParams, get_preset

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def fig1():
    return get_preset("FIG1")


@pytest.fixture
def lossless():
    """FIG1 geometry with both loss channels switched off and no transit delay."""
    return get_preset("FIG1").replace(kappa_in=0.0, gamma_m=0.0, cell_transit=0.0)


def natural(**kw):
    """Natural-unit parameters (kappa_ex = 1) with optional overrides."""
    base = dict(
        omega1=1.0e5,
        omega_m=10.0,
        kappa_ex=1.0,
        kappa_in=0.0,
        gamma_m=0.0,
        omega_drive=0.1,
        h_coupling=1.0e-3,
        n_elements=1,
        phase_per_cell=math.pi / 2,
        cell_transit=0.0,
    )
    base.update(kw)
    return SystemParams(**base)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
