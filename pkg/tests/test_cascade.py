import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omarray.cascade import (
    SPECTRUM_COLUMNS,
    array_spectrum,
    bandwidth_delay_product,
    bandwidth_limits,
    bloch_series,
    cascade_matrix,
    crossover_n,
    default_grid,
    effective_wavevector,
    keff_series,
    measured_bandwidth_delay,
    unwrap_from_center,
)
from omarray.constants import TOL_CASCADE_UNITARITY, TOL_POWER_PATHS, TWO_PI
from omarray.model import get_preset
from omarray.scattering import block_matrix, reflection, transmission

from conftest import natural


def fit_order(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def test_single_cell_equals_block(fig1):
    d = np.linspace(-0.3, 0.3, 7)
    assert cascade_matrix(d, fig1, 1).allclose(block_matrix(d, fig1), 1e-15)


def test_single_element_spectrum_matches_scattering(fig1):
    grid = np.linspace(-1, 1, 501)
    s = array_spectrum(fig1, 1, grid)
    assert np.allclose(s.r, reflection(grid, fig1), atol=1e-14)
    assert np.allclose(s.t, transmission(grid, fig1), atol=1e-14)


def test_two_element_reflection_suppressed(lossless):
    # reference planes at the elements: r_2 = +kex^2 d^2 / (2 Omega^4) + O(d^3)
    kex, om = lossless.kappa_ex, lossless.omega_drive
    for d in (1e-3, 1e-4):
        r2 = array_spectrum(lossless, 2, np.array([d])).r[0]
        assert r2.real == pytest.approx(kex**2 * d**2 / (2 * om**4), rel=20 * d)
    # the M12/M22 form including the trailing free span carries the opposite sign
    d = 1e-4
    m = cascade_matrix(np.array([d]), lossless, 2)
    assert complex(m.m12[0] / m.m22[0]).real == pytest.approx(-kex**2 * d**2 / (2 * om**4), rel=20 * d)


def test_power_paths_agree(fig1):
    grid = default_grid(fig1, points=801)
    eig = cascade_matrix(grid, fig1, 64, "eig")
    sq = cascade_matrix(grid, fig1, 64, "squaring")
    ok = ~eig.info["overflow"]
    scale = np.maximum(1.0, np.abs(sq.data[ok]).max(axis=(-2, -1)))
    err = np.abs(eig.data[ok] - sq.data[ok]).max(axis=(-2, -1)) / scale
    assert err.max() < TOL_POWER_PATHS


@given(st.integers(1, 30), st.integers(1, 30), st.floats(-0.6, 0.6))
def test_semigroup(a, b, d):
    p = natural(omega_drive=0.1, kappa_in=0.1)
    lhs = cascade_matrix(np.array([d]), p, a + b)
    rhs = cascade_matrix(np.array([d]), p, a) @ cascade_matrix(np.array([d]), p, b)
    scale = max(1.0, np.abs(rhs.data).max())
    assert np.abs(lhs.data - rhs.data).max() / scale < TOL_POWER_PATHS


@pytest.mark.parametrize("n", [1, 7, 64, 300])
def test_determinant_of_cascades(fig1, n):
    m = cascade_matrix(default_grid(fig1, points=401), fig1, n)
    ok = ~m.info["overflow"]
    assert m.det_error()[ok].max() < 1e-9 * n


@pytest.mark.parametrize("n", [1, 2, 10, 100])
def test_lossless_spectrum_unitary(lossless, n):
    s = array_spectrum(lossless, n)
    assert np.abs(s.reflectance + s.transmittance - 1).max() < TOL_CASCADE_UNITARITY


@pytest.mark.parametrize("n", [1, 10, 50])
def test_group_delay_on_resonance(fig1, n):
    p = fig1.replace(cell_transit=0.0)
    grid = np.linspace(-1e-4, 1e-4, 201)
    s = array_spectrum(p, n, grid)
    tau = s.group_delay[100]
    assert tau == pytest.approx(n * p.kappa_ex / (2 * p.omega_drive**2), rel=0.01)


def test_spectrum_grid_must_increase(fig1):
    with pytest.raises(ValueError):
        array_spectrum(fig1, 2, np.array([0.1, 0.0]))


def test_blocked_rows_are_opaque(lossless):
    grid = np.array([-lossless.omega_drive, 0.0, lossless.omega_drive])
    s = array_spectrum(lossless, 5, grid)
    assert s.t[0] == 0 and s.t[2] == 0
    assert abs(s.r[0]) == pytest.approx(1.0)


def test_spectrum_csv(tmp_path, fig1):
    s = array_spectrum(fig1, 3, np.linspace(-0.5, 0.5, 11))
    path = tmp_path / "s.csv"
    s.to_csv(path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert tuple(rows[0]) == SPECTRUM_COLUMNS
    assert float(rows[1][0]) == -0.5
    assert float(rows[6][6]) == s.transmittance[5]  # 17 significant digits round-trip
    s.to_csv(tmp_path / "o.csv", ordinary=True)
    rows = list(csv.reader((tmp_path / "o.csv").read_text().splitlines()))
    assert rows[0][0] == "delta/2pi"
    assert float(rows[1][0]) == pytest.approx(-0.5 / TWO_PI, rel=1e-15)


def test_unwrap_from_center():
    delta = np.linspace(-5, 5, 1001)
    phase = 3.0 * delta + 0.2
    wrapped = np.angle(np.exp(1j * phase))
    assert np.allclose(unwrap_from_center(wrapped, delta), phase)


def test_default_grid_refines_edges(fig1):
    g = default_grid(fig1)
    assert g[0] == -fig1.kappa_ex and g[-1] == fig1.kappa_ex
    assert g.size > 2001 and np.all(np.diff(g) > 0)


def test_keff_coefficients(fig1):
    s = keff_series(fig1)
    w2 = fig1.omega_drive**2
    assert s.c0 == fig1.phase_per_cell
    assert s.c1 == pytest.approx(fig1.kappa_ex / (2 * w2))
    assert s.c2.real == 0 and s.c2.imag == pytest.approx(fig1.kappa_ex * fig1.kappa_in / (4 * w2**2))
    assert s.group_delay_per_cell == pytest.approx(50.0)
    assert keff_series(fig1.replace(kappa_in=0.0)).c2 == 0
    with pytest.raises(ValueError):
        keff_series(fig1.replace(omega_drive=0.0))


def test_bloch_series_cubic_differs(fig1):
    a, b = keff_series(fig1), bloch_series(fig1)
    assert (a.c0, a.c1, a.c2) == (b.c0, b.c1, b.c2)
    assert b.c3 - a.c3 == pytest.approx(-fig1.kappa_ex**3 / (16 * fig1.omega_drive**6))


def test_keff_series_matches_two_block_phase(fig1):
    p = fig1.replace(cell_transit=0.0)
    ds = np.logspace(-4, -2, 9)
    err = np.abs(effective_wavevector(ds, p, 2) - keff_series(p)(ds))
    assert fit_order(ds, err) >= 3.7


def test_optimum_bandwidth_limits():
    bl = bandwidth_limits(get_preset("OPTIMUM"))
    assert 10e6 <= bl.usable / TWO_PI <= 13e6
    assert bl.binding == "absorption"


def test_bandwidth_without_loss(fig1):
    bl = bandwidth_limits(fig1.replace(kappa_in=0.0), 50)
    assert math.isinf(bl.absorption) and bl.binding == "dispersion"
    bd = bandwidth_delay_product(fig1.replace(kappa_in=0.0), 50)
    assert bd.product == pytest.approx((6 * math.pi * 2500) ** (1 / 3))


def test_bandwidth_delay_arms():
    p = natural(kappa_in=1 / 36)
    bd = bandwidth_delay_product(p, 100)
    assert bd.absorption_arm == pytest.approx(math.sqrt(7200))
    assert bd.dispersion_arm == pytest.approx(57.3, abs=0.05)
    assert bd.product == pytest.approx(57.3, abs=0.05) and bd.binding == "dispersion"


def test_full_band_product_tends_to_n():
    p = natural(kappa_in=1e-3)
    assert bandwidth_delay_product(p, 80).full_band == pytest.approx(80, rel=0.1)


@given(st.floats(2.0, 200.0))
def test_crossover_balances_arms(ratio):
    n = crossover_n(ratio)
    assert math.sqrt(2 * n * ratio) == pytest.approx((6 * math.pi * n**2) ** (1 / 3), rel=1e-12)


def test_measured_product_grows_with_quadrature_phasing(lossless):
    vals = [measured_bandwidth_delay(lossless, n).product for n in (4, 16, 64)]
    assert vals[0] < vals[1] < vals[2]
