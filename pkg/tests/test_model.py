import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from omarray.constants import TWO_PI
from omarray.errors import ValidationError
from omarray.model import (
    CONFIG_KEYS,
    PRESETS,
    derived_rates,
    get_preset,
    params_from_mapping,
    params_to_mapping,
    validate_params,
)

from conftest import natural

rates = st.floats(1e-3, 1e3)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate(name):
    assert validate_params(PRESETS[name]).ok


def test_fig1_has_no_warnings(fig1):
    rep = validate_params(fig1)
    assert rep.ok and rep.warnings == ()


def test_preset_lookup_case_insensitive():
    assert get_preset("fig1") is PRESETS["FIG1"]
    with pytest.raises(KeyError, match="unknown preset"):
        get_preset("nope")


def test_presets_read_only():
    with pytest.raises(TypeError):
        PRESETS["X"] = PRESETS["FIG1"]
    with pytest.raises(Exception):
        PRESETS["FIG1"].kappa_ex = 2.0


@pytest.mark.parametrize("field", ["kappa_ex", "omega_m", "omega1", "h_coupling"])
def test_zero_required_rate_fails(fig1, field):
    rep = validate_params(fig1.replace(**{field: 0.0}))
    assert not rep.ok
    with pytest.raises(ValidationError):
        rep.raise_if_failed()


@pytest.mark.parametrize("field", ["kappa_in", "gamma_m", "omega_drive"])
def test_negative_rate_fails(fig1, field):
    assert not validate_params(fig1.replace(**{field: -1e-3})).ok


@pytest.mark.parametrize("phase", [0.0, -1.0])
def test_non_positive_phase_fails(fig1, phase):
    assert not validate_params(fig1.replace(phase_per_cell=phase)).ok


def test_strong_drive_warns(fig1):
    rep = validate_params(fig1.replace(omega_drive=2 * fig1.kappa))
    assert rep.ok
    assert any("weak-driving" in w for w in rep.warnings)


def test_poor_sideband_resolution_warns(fig1):
    rep = validate_params(fig1.replace(omega_m=0.5))
    assert any("sideband" in w for w in rep.warnings)


def test_phase_off_quadrature_warns(fig1):
    rep = validate_params(fig1.replace(phase_per_cell=math.pi))
    assert rep.ok and any("phase_per_cell" in w for w in rep.warnings)


def test_fig1_delay_per_cell(fig1):
    # kappa_ex = 1, Omega = 0.1: 1 / (2 * 0.01)
    assert derived_rates(fig1).delay_per_cell == pytest.approx(50.0, rel=1e-14)


def test_zero_drive_delay_is_infinite(fig1):
    d = derived_rates(fig1.replace(omega_drive=0.0))
    assert math.isinf(d.delay_per_cell) and math.isinf(d.tau_delay)


def test_optimum_delay():
    # 275 * 1.1e9 / (2 * 2pi * (130e6)^2), evaluated by hand
    assert derived_rates(get_preset("OPTIMUM")).tau_delay == pytest.approx(1.4245e-6, rel=1e-3)


def test_derived_rates_pure(fig1):
    assert derived_rates(fig1) == derived_rates(fig1)


@given(rates, rates, st.floats(1e-3, 10), st.integers(1, 500))
def test_derived_rate_identities(kex, kin, om, n):
    p = natural(kappa_ex=kex, kappa_in=kin, omega_drive=om, n_elements=n)
    d = derived_rates(p)
    assert d.kappa == kex + kin
    assert d.gamma_opt * d.kappa == pytest.approx(4 * om**2, rel=1e-14)
    # v_g in cells per second times the delay is the number of cells
    assert d.group_velocity_cells * d.tau_delay == pytest.approx(n, rel=1e-12)


def test_mapping_round_trip():
    p = get_preset("OPTIMUM")
    q = params_from_mapping(params_to_mapping(p))
    for k, v in params_to_mapping(p).items():
        assert getattr(q, k.removesuffix("_2pi")) == pytest.approx(getattr(p, k.removesuffix("_2pi")), rel=1e-15)


def test_mapping_quality_factors():
    table = {
        "omega1_2pi": 200e12, "omega_m_2pi": 10e9, "kappa_ex_2pi": 1e9, "q_1": 3e6, "q_m": 1e5,
        "omega_drive_2pi": 1e8, "h_coupling_2pi": 3e5,
    }
    p = params_from_mapping(table)
    assert p.kappa_in == pytest.approx(TWO_PI * 200e12 / 3e6)
    assert p.gamma_m == pytest.approx(TWO_PI * 10e9 / 1e5)
    assert p.q_m == pytest.approx(1e5)


def test_mapping_rejects_unknown_and_missing():
    with pytest.raises(KeyError, match="unknown"):
        params_from_mapping({"bogus": 1.0})
    with pytest.raises(KeyError, match="missing"):
        params_from_mapping({"omega1": 1.0})
    assert "kappa_ex_2pi" in CONFIG_KEYS
