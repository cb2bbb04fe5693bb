import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omarray.constants import HBAR, K_B, TWO_PI
from omarray.designopt import (
    Constraints,
    DesignBounds,
    DesignCandidate,
    axis_grid,
    evaluate,
    evaluate_arrays,
    optimize,
    reference_configuration,
)
from omarray.errors import InfeasibleDesignError


@pytest.fixture(scope="module")
def base():
    return reference_configuration()


@pytest.fixture(scope="module")
def result(base):
    return optimize(base)


def optimum_candidate(base, **kw):
    c = dict(n=275.0, kappa_ex=base.kappa_ex, omega_drive=base.omega_drive)
    c.update(kw)
    return evaluate(DesignCandidate(**c), base)


def test_optimum_candidate_by_hand(base):
    c = optimum_candidate(base)
    # hand evaluation of the same point
    kex, kin, om, n = base.kappa_ex, base.kappa_in, base.omega_drive, 275
    bw = min(2 * math.sqrt(2) * om**2 / math.sqrt(n * kex * kin), 2 * (6 * math.pi) ** (1 / 3) * om**2 / (kex * n ** (1 / 3)))
    tau = n * kex / (2 * om**2)
    T_b = 0.1 + 2e-6 * (om / base.h_coupling) ** 2
    nth = 1 / math.expm1(HBAR * base.omega_m / (K_B * T_b))
    k = kex + kin
    pn = 0.5 * n * HBAR * base.omega1 * kex / k * (base.gamma_m * nth + 4 * om**2 / k * (k / (4 * base.omega_m)) ** 2)
    assert c.bandwidth == pytest.approx(bw, rel=1e-12)
    assert c.tau == pytest.approx(tau, rel=1e-12)
    assert c.P_noise == pytest.approx(pn, rel=1e-12)
    assert c.gamma_tau == pytest.approx(0.895, abs=0.001)
    assert c.feasible_flags["storage"] and c.feasible_flags["bandwidth"]
    # the published point sits 8% short of the photon constraint
    assert c.P_ph / c.P_noise == pytest.approx(0.921, abs=0.001)
    assert c.binding == "photon"


def test_strong_drive_heats_bath(base):
    c = optimum_candidate(base)
    hot = optimum_candidate(base, omega_drive=10 * base.omega_drive)
    assert hot.T_b / c.T_b == pytest.approx((0.1 + 2e-6 * 100 * (base.omega_drive / base.h_coupling) ** 2) / c.T_b)
    assert hot.T_b / c.T_b > 36
    assert not hot.feasible_flags["photon"]


def test_single_element_feasible(base):
    c = optimum_candidate(base, n=1.0)
    assert c.feasible and c.product < 5


def test_evaluate_rejects_non_positive(base):
    with pytest.raises(ValueError):
        evaluate(DesignCandidate(0.0, 1.0, 1.0), base)


@settings(max_examples=40)
@given(st.floats(0, 4), st.floats(7, 11), st.floats(6, 10))
def test_vectorized_twin_agrees(ln, lk, lo):
    base = reference_configuration()
    n, kex, om = 10**ln, TWO_PI * 10**lk, TWO_PI * 10**lo
    c = evaluate(DesignCandidate(n, kex, om), base)
    ev = evaluate_arrays(n, kex, om, base)
    for key in ("bandwidth", "tau", "product", "T_b", "P_noise", "P_ph", "gamma_tau"):
        assert float(ev[key]) == pytest.approx(getattr(c, key), rel=1e-10)
    assert float(ev["margin_photon"]) == pytest.approx(c.margins["photon"], rel=1e-9, abs=1e-12)


def test_axis_grid():
    ax = axis_grid(1, 1e4, 20, integer=True)
    assert ax[0] == 1 and ax[-1] == 1e4
    assert np.all(ax == np.round(ax)) and np.all(np.diff(ax) > 0)
    assert axis_grid(1.0, 100.0, 20).size == 41


def test_bounds_validated():
    with pytest.raises(ValueError):
        DesignBounds(n=(10, 1))


def test_reference_optimum(result):
    best = result.best
    assert best.feasible
    assert best.product == pytest.approx(110, rel=0.25)
    assert 275 / 2 <= best.n <= 275 * 2
    assert 1.1e9 / 2 <= best.kappa_ex / TWO_PI <= 1.1e9 * 2
    assert 130e6 / 2 <= best.omega_drive / TWO_PI <= 130e6 * 2
    assert best.n == round(best.n)


def test_no_grid_point_dominates(result):
    g = result.grid
    feas = (g["margin_photon"] >= 0) & (g["margin_storage"] >= 0)
    assert g["product"][feas].max() <= result.best.product * (1 + 1e-12)


def test_no_pump_heating_does_better(base, result):
    relaxed = optimize(base.replace(chi=0.0))
    assert relaxed.best.product > result.best.product


@pytest.mark.parametrize("field, tighter", [("min_photon_ratio", 2.0), ("max_gamma_tau", 0.5)])
def test_tightening_never_helps(base, result, field, tighter):
    cons = Constraints(**{field: tighter})
    assert optimize(base, constraints=cons).best.product <= result.best.product


def test_coarse_grid_matches_brute_force(base):
    res = optimize(base, grid_points=(10, 10, 10), refine=False)
    b = DesignBounds()
    ax = [axis_grid(*b.n, points=10, integer=True), axis_grid(*b.kappa_ex, points=10), axis_grid(*b.omega_drive, points=10)]
    best = None
    for n in ax[0]:
        for k in ax[1]:
            for o in ax[2]:
                c = evaluate(DesignCandidate(float(n), float(k), float(o)), base)
                if c.feasible and (best is None or c.product > best.product):
                    best = c
    assert (res.best.n, res.best.kappa_ex, res.best.omega_drive) == (best.n, best.kappa_ex, best.omega_drive)


def test_infeasible_box_reports_binding(base):
    bounds = DesignBounds(n=(5000, 10000), kappa_ex=(TWO_PI * 1e11, TWO_PI * 1e11), omega_drive=(TWO_PI * 1e6, TWO_PI * 2e6))
    with pytest.raises(InfeasibleDesignError) as info:
        optimize(base, bounds)
    assert info.value.binding in ("photon", "storage")


def test_grid_csv(tmp_path, base):
    res = optimize(base, grid_points=(3, 3, 3), refine=False)
    res.write_grid_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert len(lines) == 28 and lines[0].startswith("N,kappa_ex_2pi,omega_drive_2pi")
