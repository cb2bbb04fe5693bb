"""Infinite periodic array: Bloch dispersion, band edges and how each Bloch mode is shared among waveguide, cavity and mechanics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cascade import write_csv
from .constants import TWO_PI
from .errors import BandEdgeError, BandGapError
from .model import SystemParams
from .scattering import _den_p, _mech, beta, block_matrix, free_phase
from .twoport import eig2

# Relative eigenvalue separation below which the Bloch eigenbasis is treated as degenerate.
EDGE_TOL = 1e-6


@dataclass(frozen=True)
class DispersionPoint:
    delta: float
    bloch_K_times_d: complex
    f_waveguide: float
    f_optical: float
    f_mechanical: float


@dataclass(frozen=True)
class BandEdges:
    """Edges of the slow (central) band and the outer edges of the two gaps, all positive detunings.

    ``inner_approx`` and ``outer_approx`` are the weak-driving estimates
    ``2 Omega^2/kappa`` and ``kappa_ex/2``.
    """

    inner: float
    outer: float
    inner_approx: float
    outer_approx: float
    strong_driving: bool = False

    @property
    def slow_band_width(self) -> float:
        return 2.0 * self.inner

    def in_gap(self, delta) -> np.ndarray:
        a = np.abs(np.asarray(delta, dtype=float))
        return (a > self.inner) & (a < self.outer)


def bloch_wavevector(delta, p: SystemParams):
    """Complex Bloch phase per cell, ``K d``, from ``cos(K d) = cos(kd) - i beta sin(kd)``.

    Branch: ``Im(K d) >= 0`` (the mode decays along its direction of travel)
    and the real part is shifted by multiples of 2 pi to sit closest to
    ``phase_per_cell``, so that ``K d = phase_per_cell`` at ``delta = 0``.
    """
    delta = np.asarray(delta, dtype=float)
    kd = free_phase(delta, p)
    c = np.cos(kd) - 1j * beta(delta, p) * np.sin(kd)
    K = np.arccos(np.asarray(c, dtype=complex))
    K = np.where(K.imag < 0, -K, K)
    shift = np.round((p.phase_per_cell - K.real) / (2 * math.pi))
    return K + 2 * math.pi * shift


def simple_cos_kd(delta, p: SystemParams):
    """Lossless dispersion with the free-propagation delay neglected: ``-kappa_ex delta / (2 (Omega^2 - delta^2))``."""
    delta = np.asarray(delta, dtype=float)
    return -p.kappa_ex * delta / (2.0 * (p.omega_drive**2 - delta**2))


def band_edges(p: SystemParams) -> BandEdges:
    """Roots of ``|cos K d| = 1`` for the simplified lossless dispersion, located by bracketing."""
    w = p.omega_drive
    if w <= 0:
        raise ValueError("band edges require a nonzero optomechanical drive")
    kex = p.kappa_ex

    def f(x):
        return abs(simple_cos_kd(x, p)) - 1.0

    inner = brentq(f, 0.0, w * (1 - 1e-15), xtol=1e-15 * w, rtol=4 * np.finfo(float).eps)
    hi = w + kex
    outer = brentq(f, w * (1 + 1e-15), hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps)
    return BandEdges(
        inner=float(inner),
        outer=float(outer),
        inner_approx=2 * w**2 / p.kappa,
        outer_approx=kex / 2,
        strong_driving=w > kex,
    )


def _occupation_numbers(delta, p: SystemParams):
    """Unnormalized (n_wg, n_o, n_m) for the forward Bloch mode, plus the eigenvalue gap."""
    delta = np.asarray(delta, dtype=float)
    K = bloch_wavevector(delta, p)
    lam, S = eig2(block_matrix(delta, p).data)
    target = np.exp(1j * K)
    pick = np.argmin(np.abs(lam - target[..., None]), axis=-1)
    vec = np.take_along_axis(S, pick[..., None, None], axis=-1)[..., 0]
    sigma = vec[..., 0] + vec[..., 1]
    half_ex = 0.5 * p.kappa_ex
    den2 = np.abs(_den_p(delta, p)) ** 2
    s2 = np.abs(sigma) ** 2
    n_wg = np.full(delta.shape, p.cell_transit)
    n_o = half_ex * np.abs(_mech(delta, p)) ** 2 * s2 / den2
    n_m = p.omega_drive**2 * half_ex * s2 / den2
    gap = np.abs(lam[..., 0] - lam[..., 1]) / np.maximum(np.abs(lam).max(axis=-1), 1.0)
    return n_wg, n_o, n_m, gap


def occupations(delta, p: SystemParams):
    """Fractions of the forward Bloch mode's energy in the waveguide, the cavity and the mechanics.

    Eigenvectors of the unit-cell matrix are normalized to unit Euclidean
    norm. The mechanical number uses the intrinsic mechanical linewidth.

    Raises
    ------
    BandGapError
        If any detuning lies in a gap of the simplified lossless dispersion.
    BandEdgeError
        If the two Bloch eigenvalues (nearly) coincide.
    """
    delta = np.asarray(delta, dtype=float)
    if p.omega_drive > 0:
        edges = band_edges(p)
        if np.any(edges.in_gap(delta)):
            raise BandGapError("detuning inside a band gap; no propagating Bloch mode", edges=edges)
    n_wg, n_o, n_m, gap = _occupation_numbers(delta, p)
    if np.any(gap < EDGE_TOL):
        raise BandEdgeError("Bloch eigenvalues degenerate: detuning at a band edge")
    tot = n_wg + n_o + n_m
    if np.any(tot == 0):
        raise BandEdgeError("forward mode carries no energy (zero-length cell with vanishing cavity field)")
    return n_wg / tot, n_o / tot, n_m / tot


def dispersion(grid, p: SystemParams) -> list:
    """Bloch phase and occupations on a grid; occupations are NaN in gaps and at band edges."""
    grid = np.asarray(grid, dtype=float)
    K = bloch_wavevector(grid, p)
    n_wg, n_o, n_m, gap = _occupation_numbers(grid, p)
    tot = n_wg + n_o + n_m
    bad = (gap < EDGE_TOL) | (tot == 0)
    if p.omega_drive > 0:
        bad |= band_edges(p).in_gap(grid)
    with np.errstate(invalid="ignore", divide="ignore"):
        fr = [np.where(bad, np.nan, x / tot) for x in (n_wg, n_o, n_m)]
    return [
        DispersionPoint(float(d), complex(k), float(a), float(b), float(c))
        for d, k, a, b, c in zip(grid, K, *fr)
    ]


def write_band_csv(path, points, ordinary: bool = False):
    """Columns: detuning, Re Kd, Im Kd and the three occupation fractions."""
    scale, name = (TWO_PI, "delta/2pi") if ordinary else (1.0, "delta")
    write_csv(
        path,
        {
            name: [pt.delta / scale for pt in points],
            "re_Kd": [pt.bloch_K_times_d.real for pt in points],
            "im_Kd": [pt.bloch_K_times_d.imag for pt in points],
            "f_waveguide": [pt.f_waveguide for pt in points],
            "f_optical": [pt.f_optical for pt in points],
            "f_mechanical": [pt.f_mechanical for pt in points],
        },
    )


def group_velocity_numeric(delta, p: SystemParams, step: float | None = None) -> float:
    """Group velocity in cells per second, ``1 / (d Re(K d) / d delta)``, by a central difference.

    The default step is ``1e-4`` of the inner band edge. A warning is issued
    when the stencil reaches within 10% of a band edge.
    """
    delta = float(delta)
    if p.omega_drive > 0:
        edges = band_edges(p)
        scale = edges.inner
    else:
        edges = None
        scale = p.kappa
    h = 1e-4 * scale if step is None else float(step)
    if edges is not None:
        near = min(abs(abs(delta) + h - edges.inner), abs(abs(delta) - h - edges.inner))
        if near < 0.1 * edges.inner:
            warnings.warn("group velocity stencil close to a band edge; derivative may be inaccurate", RuntimeWarning)
    k = bloch_wavevector(np.array([delta - h, delta + h]), p).real
    slope = (k[1] - k[0]) / (2 * h)
    return 1.0 / slope
