import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from omarray.constants import TOL_CROSSCHECK, TOL_IDENTITY
from omarray.errors import SingularMatrixError, SingularPointError
from omarray.scattering import (
    beta,
    block_matrix,
    element_matrix,
    element_matrix_beta,
    free_matrix,
    reflection,
    reflection_lossless_mech,
    transmission,
)

from conftest import natural

detunings = st.floats(-3.0, 3.0, allow_nan=False)
drives = st.floats(0.01, 0.5)


def beta_oracle(d, kex, kin, om):
    """Element parameter written out with plain complex arithmetic (gamma_m = 0)."""
    return (-1j * kex * d) / (-1j * kin * d + 2 * (om * om - d * d))


def test_beta_zero_on_resonance(fig1):
    assert beta(0.0, fig1) == 0


def test_beta_at_mechanical_pole(fig1):
    # delta^2 = Omega^2 leaves -i kex d / (-i kin d) = kex / kin
    assert beta(fig1.omega_drive, fig1) == pytest.approx(fig1.kappa_ex / fig1.kappa_in, rel=1e-12)


def test_beta_matches_direct_evaluation(fig1):
    d = 0.05 * fig1.kappa_ex
    ref = beta_oracle(d, fig1.kappa_ex, fig1.kappa_in, fig1.omega_drive)
    assert abs(complex(beta(d, fig1)) - ref) < 1e-13


def test_beta_bare_cavity_limit(fig1):
    p = fig1.replace(omega_drive=0.0)
    assert beta(0.0, p) == pytest.approx(p.kappa_ex / p.kappa_in)
    with pytest.raises(SingularPointError):
        beta(0.0, p.replace(kappa_in=0.0))


def test_reflection_on_resonance(fig1):
    assert reflection(0.0, fig1) == 0
    assert transmission(0.0, fig1) == 1


def test_reflection_undriven_cavity(fig1):
    r = reflection(0.0, fig1.replace(omega_drive=0.0))
    assert r == pytest.approx(-10 / 11, rel=1e-14)


@given(detunings, drives)
def test_single_element_flux_unitarity(d, om):
    p = natural(omega_drive=om)
    r = complex(reflection(d, p))
    t = complex(transmission(d, p))
    assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1.0, abs=TOL_IDENTITY)


@given(detunings, drives, st.floats(0.0, 0.5))
def test_reflection_symmetry(d, om, kin):
    p = natural(omega_drive=om, kappa_in=kin)
    assert complex(reflection(-d, p)) == pytest.approx(complex(reflection(d, p)).conjugate(), abs=1e-13)


@given(detunings.filter(lambda d: abs(d) > 1e-3), drives, st.floats(0.0, 0.5))
def test_generalized_form_reduces_to_lossless_mechanics(d, om, kin):
    p = natural(omega_drive=om, kappa_in=kin)
    assert complex(reflection(d, p)) == pytest.approx(complex(reflection_lossless_mech(d, p)), abs=1e-12)


def test_mechanical_loss_continuity(fig1):
    d = 0.07
    ref = complex(reflection_lossless_mech(d, fig1))
    errs = [abs(complex(reflection(d, fig1.replace(gamma_m=g))) - ref) for g in (1e-4, 1e-5, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.01)


def test_element_matrix_identity_on_resonance(fig1):
    assert np.allclose(element_matrix(0.0, fig1).data, np.eye(2), atol=1e-15)


def test_element_matrix_two_constructions(fig1):
    d = 0.05 * fig1.kappa_ex
    assert element_matrix(d, fig1).allclose(element_matrix_beta(d, fig1), TOL_CROSSCHECK)


@given(detunings, drives, st.floats(0.0, 0.5), st.floats(0.0, 0.01))
def test_transfer_matrices_unimodular(d, om, kin, gm):
    p = natural(omega_drive=om, kappa_in=kin, gamma_m=gm, cell_transit=1e-3)
    # lossless transmission zeros at delta = +-Omega have no transfer matrix
    assume(abs(complex(transmission(d, p))) > 1e-6)
    for m in (element_matrix(d, p), free_matrix(d, p), block_matrix(d, p)):
        assert float(m.det_error()) < TOL_IDENTITY


def test_free_matrix_phases():
    p = natural()
    assert np.allclose(free_matrix(0.0, p).data, np.diag([1j, -1j]), atol=1e-15)
    q = natural(phase_per_cell=math.pi)
    assert np.allclose(free_matrix(0.0, q).data, -np.eye(2), atol=1e-15)
    assert np.allclose(abs(free_matrix(0.3, natural(cell_transit=2.0)).m11), 1.0)


def test_block_on_resonance(fig1):
    assert np.allclose(block_matrix(0.0, fig1.replace(cell_transit=0.0)).data, np.diag([1j, -1j]), atol=1e-15)


def test_perfect_reflection_is_singular(lossless):
    # lossless undriven cavity reflects fully on resonance
    with pytest.raises(SingularMatrixError):
        element_matrix(0.0, lossless.replace(omega_drive=0.0))


def test_reflection_left_incidence_mirror(fig1):
    # the element matrix is reciprocal: M21 = -M12 means identical r from either side
    m = element_matrix(0.2, fig1)
    assert complex(m.m21) == pytest.approx(-complex(m.m12))
    assert cmath.isclose(complex(-m.m21 / m.m22), complex(reflection(0.2, fig1)), abs_tol=1e-14)
