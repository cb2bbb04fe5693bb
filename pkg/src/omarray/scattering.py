"""Frequency-domain response of a single optomechanical element on the waveguide.

Sign and time conventions: fields oscillate as ``exp(-i delta t)`` in the frame
rotating at the active cavity frequency, and a right-moving wave picks up
``exp(+i k z)``. Flux-normalized waveguide amplitudes jump across element j as
``u_out = u_in + i sqrt(kappa_ex/2) a_j`` in both directions.

Mechanical loss is kept throughout. Eliminating the mechanical amplitude from
the steady-state cavity and mechanical equations gives an effective cavity
denominator ``kappa/2 - i delta + Omega^2/(gamma_m/2 - i delta)``; every
quantity below is written over the common polynomial denominators

    P(delta) = (gamma_m/2 - i delta)(kappa_in/2 - i delta) + Omega^2
    Q(delta) = (gamma_m/2 - i delta)(kappa/2    - i delta) + Omega^2

so that nothing is singular at ``delta = 0`` when ``gamma_m = 0``.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrixError, SingularPointError
from .model import SystemParams
from .twoport import TwoPortMatrix

# |t| below this makes the element matrix numerically meaningless (entries ~ 1/|t|).
SINGULAR_T = 1.5e-8


def _mech(delta, p):
    return 0.5 * p.gamma_m - 1j * delta


def _den_p(delta, p):
    return _mech(delta, p) * (0.5 * p.kappa_in - 1j * delta) + p.omega_drive**2


def _den_q(delta, p):
    return _mech(delta, p) * (0.5 * p.kappa - 1j * delta) + p.omega_drive**2


def beta(delta, p: SystemParams):
    """Element parameter beta(delta) of the ``(1-beta, -beta; beta, 1+beta)`` transfer matrix.

    Reduces to ``-i kex d / (-i kin d + 2 (Omega^2 - d^2))`` at ``gamma_m = 0``.
    Without drive the element is a bare side-coupled cavity,
    ``beta = (kex/2)/(kin/2 - i delta)``, whose ``delta -> 0`` limit is
    ``kex/kin``; with ``kappa_in = 0`` as well that point is a true pole and
    raises :class:`SingularPointError`.
    """
    delta = np.asarray(delta, dtype=float)
    half_ex = 0.5 * p.kappa_ex
    if p.omega_drive == 0:
        den = 0.5 * p.kappa_in - 1j * delta
        if np.any(den == 0):
            raise SingularPointError("beta has a pole at delta=0 for an undriven, lossless cavity")
        return half_ex / den
    den = _den_p(delta, p)
    if np.any(den == 0):
        raise SingularPointError("beta diverges (element transmission vanishes) at this detuning")
    return half_ex * _mech(delta, p) / den


def reflection(delta, p: SystemParams):
    """Single-element amplitude reflection r(delta) for a wave incident from the left."""
    delta = np.asarray(delta, dtype=float)
    half_ex = 0.5 * p.kappa_ex
    if p.omega_drive == 0:
        den = 0.5 * p.kappa - 1j * delta
        return -half_ex / den
    return -half_ex * _mech(delta, p) / _den_q(delta, p)


def transmission(delta, p: SystemParams):
    """Single-element amplitude transmission, t = 1 + r."""
    return 1.0 + reflection(delta, p)


def reflection_lossless_mech(delta, p: SystemParams):
    """Closed form valid only for ``gamma_m = 0`` (kept as an independent check)."""
    delta = np.asarray(delta, dtype=float)
    om2 = p.omega_drive**2
    return -delta * p.kappa_ex / (delta * (-2j * delta + p.kappa) + 2j * om2)


def cavity_response(delta, p: SystemParams):
    """Cavity and mechanical amplitudes per unit sum of the two *input* fields.

    Returns ``(a, b)`` for ``u_R,in + u_L,in = 1``.
    """
    delta = np.asarray(delta, dtype=float)
    g = np.sqrt(0.5 * p.kappa_ex)
    q = _den_q(delta, p)
    a = 1j * g * _mech(delta, p) / q
    b = -p.omega_drive * g / q
    return a, b


def element_matrix(delta, p: SystemParams) -> TwoPortMatrix:
    """Transfer matrix ``(1/t)(t^2 - r^2, r; -r, 1)`` across one element."""
    r = reflection(delta, p)
    t = 1.0 + r
    if np.any(np.abs(t) < SINGULAR_T):
        raise SingularMatrixError("element transmission vanishes; transfer matrix undefined at this detuning")
    return TwoPortMatrix.from_entries((t * t - r * r) / t, r / t, -r / t, 1.0 / t)


def element_matrix_beta(delta, p: SystemParams) -> TwoPortMatrix:
    """Same matrix assembled from beta; used to cross-check :func:`element_matrix`."""
    b = beta(delta, p)
    if np.any(np.abs(b) > 1.0 / SINGULAR_T):
        raise SingularMatrixError("beta diverges; transfer matrix undefined at this detuning")
    return TwoPortMatrix.from_entries(1.0 - b, -b, b, 1.0 + b)


def free_phase(delta, p: SystemParams):
    """Free-propagation phase kd over one cell."""
    return p.phase_per_cell + np.asarray(delta, dtype=float) * p.cell_transit


def free_matrix(delta, p: SystemParams) -> TwoPortMatrix:
    kd = free_phase(delta, p)
    e = np.exp(1j * kd)
    return TwoPortMatrix.from_entries(e, 0.0, 0.0, 1.0 / e)


def block_matrix(delta, p: SystemParams) -> TwoPortMatrix:
    """One unit cell: element followed by free propagation to the next element."""
    return free_matrix(delta, p) @ element_matrix(delta, p)
