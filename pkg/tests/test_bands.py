import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omarray.bands import (
    band_edges,
    bloch_wavevector,
    dispersion,
    group_velocity_numeric,
    occupations,
    simple_cos_kd,
    write_band_csv,
)
from omarray.cascade import array_spectrum
from omarray.constants import TOL_FRACTIONS
from omarray.errors import BandGapError

from conftest import natural


def test_resonance_phase(fig1):
    assert bloch_wavevector(0.0, fig1) == math.pi / 2


def test_real_dispersion_in_lossless_band(lossless):
    e = band_edges(lossless)
    grid = np.linspace(-0.95 * e.inner, 0.95 * e.inner, 401)
    assert np.abs(bloch_wavevector(grid, lossless).imag).max() < 1e-10


def test_decay_in_lossless_gap(lossless):
    e = band_edges(lossless)
    grid = np.linspace(1.05 * e.inner, 0.95 * e.outer, 401)
    assert np.all(bloch_wavevector(grid, lossless).imag > 0)
    assert np.all(bloch_wavevector(-grid, lossless).imag > 0)


@given(st.floats(-2.0, 2.0), st.floats(0.01, 0.3))
def test_branch_decays(d, kin):
    assert bloch_wavevector(d, natural(kappa_in=kin)).imag >= 0


def test_band_edges_weak_drive(lossless):
    e = band_edges(lossless)
    assert e.inner == pytest.approx(2 * lossless.omega_drive**2 / lossless.kappa_ex, rel=0.1)
    assert e.outer == pytest.approx(lossless.kappa_ex / 2, rel=0.1)
    assert 0 < e.inner < e.outer
    assert not e.strong_driving
    # edges are roots of |cos K d| = 1 of the simplified dispersion
    assert abs(simple_cos_kd(e.inner, lossless)) == pytest.approx(1.0, abs=1e-12)
    assert abs(simple_cos_kd(e.outer, lossless)) == pytest.approx(1.0, abs=1e-12)


def test_band_width_scales_with_drive_squared(lossless):
    w1 = band_edges(lossless).slow_band_width
    w2 = band_edges(lossless.replace(omega_drive=2 * lossless.omega_drive)).slow_band_width
    assert w2 / w1 == pytest.approx(4.0, rel=0.15)


def test_strong_driving_flagged(lossless):
    e = band_edges(lossless.replace(omega_drive=2.0))
    assert e.strong_driving and e.inner < e.outer


def test_band_edges_need_drive(lossless):
    with pytest.raises(ValueError):
        band_edges(lossless.replace(omega_drive=0.0))


@given(st.floats(0.0, 0.0185))
def test_simplified_dispersion_is_odd(d):
    p = natural()
    assert simple_cos_kd(-d, p) == -simple_cos_kd(d, p)
    k_plus = bloch_wavevector(d, p).real - math.pi / 2
    k_minus = bloch_wavevector(-d, p).real - math.pi / 2
    assert k_plus == pytest.approx(-k_minus, abs=1e-12)


def test_resonant_mode_is_mechanical(fig1):
    assert occupations(np.array([0.0]), fig1)[2][0] > 0.9


def test_far_detuned_mode_is_waveguide(fig1):
    f = [occupations(np.array([d]), fig1)[0][0] for d in (10.0, 50.0, 200.0)]
    assert f[0] < f[1] < f[2] and f[2] > 0.98


@given(st.one_of(st.floats(-0.018, 0.018), st.floats(0.6, 50.0), st.floats(-50.0, -0.6)))
def test_fractions_sum_to_one(d):
    p = natural(kappa_in=0.1, cell_transit=1e-3)
    f = occupations(np.array([d]), p)
    assert all(0 <= x[0] <= 1 for x in f)
    assert sum(x[0] for x in f) == pytest.approx(1.0, abs=TOL_FRACTIONS)


def test_mechanical_fraction_rises_as_drive_falls(fig1):
    fm = [occupations(np.array([1e-6]), fig1.replace(omega_drive=om))[2][0] for om in (0.1, 0.05, 0.02, 0.01)]
    assert all(a < b for a, b in zip(fm, fm[1:]))
    assert fm[-1] > 0.99999


def test_gap_rejected(fig1):
    with pytest.raises(BandGapError):
        occupations(np.array([0.2]), fig1)


def test_dispersion_marks_gaps(fig1):
    pts = dispersion(np.array([0.0, 0.2, 2.0]), fig1)
    assert not math.isnan(pts[0].f_mechanical)
    assert math.isnan(pts[1].f_mechanical)
    assert not math.isnan(pts[2].f_waveguide)


def test_group_velocity_on_resonance(fig1):
    v = group_velocity_numeric(0.0, fig1.replace(cell_transit=0.0))
    assert v == pytest.approx(2 * fig1.omega_drive**2 / fig1.kappa_ex, rel=1e-4)


def test_group_velocity_scales_with_drive(fig1):
    p = fig1.replace(cell_transit=0.0)
    ratio = group_velocity_numeric(0.0, p.replace(omega_drive=0.05)) / group_velocity_numeric(0.0, p)
    assert ratio == pytest.approx(0.25, rel=1e-3)


def test_group_velocity_falls_toward_edge(fig1):
    e = band_edges(fig1)
    v = [group_velocity_numeric(x * e.inner, fig1) for x in (0.0, 0.25, 0.5)]
    assert v[0] > v[1] > v[2] > 0


def test_group_velocity_edge_warning(fig1):
    e = band_edges(fig1)
    with pytest.warns(RuntimeWarning):
        group_velocity_numeric(0.97 * e.inner, fig1)


def test_bloch_decay_matches_finite_array(fig1):
    # end reflections add a Fabry-Perot ripple that grows toward the band edge (2.6% at 0.25 of it)
    p = fig1.replace(cell_transit=0.0)
    e = band_edges(p)
    grid = np.linspace(-0.2 * e.inner, 0.2 * e.inner, 201)
    bloch = np.abs(np.exp(1j * 32 * bloch_wavevector(grid, p)))
    finite = np.abs(array_spectrum(p, 32, grid).t)
    assert np.abs(bloch / finite - 1).max() < 0.02


def test_band_csv_deterministic(tmp_path, fig1):
    grid = np.linspace(-1, 1, 101)
    write_band_csv(tmp_path / "a.csv", dispersion(grid, fig1), ordinary=True)
    write_band_csv(tmp_path / "b.csv", dispersion(grid, fig1), ordinary=True)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = next(csv.reader((tmp_path / "a.csv").open()))
    assert header == ["delta/2pi", "re_Kd", "im_Kd", "f_waveguide", "f_optical", "f_mechanical"]
