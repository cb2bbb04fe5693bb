"""Finite arrays of N elements: transfer-matrix products, spectra, k_eff series and bandwidth limits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .constants import OVERFLOW_GUARD, TWO_PI, UNDERFLOW_GUARD
from .model import SystemParams
from .scattering import SINGULAR_T, block_matrix, free_phase, reflection, transmission
from .twoport import TwoPortMatrix, power_eig, power_squaring

METHODS = ("auto", "eig", "squaring")


def cascade_scaled(delta, p: SystemParams, n: int, method: str = "auto"):
    """``M_block**n`` in scaled form.

    Returns ``(mhat, log_scale, fallback)`` with ``M**n = exp(log_scale) * mhat``
    and ``fallback`` marking points where the eigen path was replaced by
    repeated squaring (degenerate eigenvalues, e.g. band edges).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    data = block_matrix(delta, p).data
    shape = data.shape[:-2]
    if method == "squaring" or n <= 1:
        mhat, ls = power_squaring(data, n)
        return mhat, ls, np.full(shape, method != "eig" and n > 1)
    mhat, ls, degenerate = power_eig(data, n)
    if method == "eig":
        return mhat, ls, np.zeros(shape, dtype=bool)
    if np.any(degenerate):
        mh2, ls2 = power_squaring(data[degenerate], n)
        mhat = mhat.copy()
        ls = np.array(ls, copy=True)
        mhat[degenerate] = mh2
        ls[degenerate] = ls2
    return mhat, ls, degenerate


def cascade_matrix(delta, p: SystemParams, n: int, method: str = "auto") -> TwoPortMatrix:
    """Transfer matrix of n unit cells, ``M_block**n``.

    ``info['fallback']`` flags points computed by repeated squaring;
    ``info['overflow']`` flags points whose entries exceed the float range
    (use :func:`cascade_scaled` there).
    """
    mhat, ls, fallback = cascade_scaled(delta, p, n, method)
    with np.errstate(over="ignore"):
        scale = np.exp(ls)
    out = TwoPortMatrix(mhat * scale[..., None, None])
    out.info["fallback"] = fallback
    out.info["overflow"] = ls > math.log(OVERFLOW_GUARD)
    out.info["log_scale"] = ls
    return out


# ---------------------------------------------------------------- spectra

SPECTRUM_COLUMNS = (
    "delta",
    "r_re",
    "r_im",
    "t_re",
    "t_im",
    "reflectance",
    "transmittance",
    "phase_t",
    "group_delay",
)


@dataclass(frozen=True)
class SpectrumTable:
    """Reflection/transmission of an N-element array on a detuning grid.

    Reference planes sit immediately before the first element and immediately
    after the last one, so ``n = 1`` reproduces the single-element r and t.
    ``group_delay`` is ``d(arg t)/d delta`` (positive for slow light with the
    ``exp(-i delta t)`` convention).
    """

    delta: np.ndarray
    r: np.ndarray
    t: np.ndarray
    n: int

    @property
    def reflectance(self):
        return np.abs(self.r) ** 2

    @property
    def transmittance(self):
        return np.abs(self.t) ** 2

    @property
    def phase(self):
        return unwrap_from_center(np.angle(self.t), self.delta)

    @property
    def group_delay(self):
        return np.gradient(self.phase, self.delta)

    def columns(self):
        return {
            "delta": self.delta,
            "r_re": self.r.real,
            "r_im": self.r.imag,
            "t_re": self.t.real,
            "t_im": self.t.imag,
            "reflectance": self.reflectance,
            "transmittance": self.transmittance,
            "phase_t": self.phase,
            "group_delay": self.group_delay,
        }

    def to_csv(self, path, ordinary: bool = False):
        """Write the columns of :data:`SPECTRUM_COLUMNS` in that order.

        With ``ordinary`` the detuning is written as ``delta/2pi`` (Hz) and
        the column is labelled accordingly.
        """
        cols = self.columns()
        if ordinary:
            cols = {("delta/2pi" if k == "delta" else k): (v / TWO_PI if k == "delta" else v) for k, v in cols.items()}
        write_csv(path, cols)


def write_csv(path, columns: dict):
    """Comma-separated, header row, LF endings, 17 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([format(float(v), ".17g") for v in row])


def unwrap_from_center(phase, delta):
    """Continuity-based unwrapping that starts at the grid point nearest delta = 0."""
    phase = np.asarray(phase, dtype=float)
    if phase.size < 2:
        return phase.copy()
    i0 = int(np.argmin(np.abs(delta)))
    out = np.empty_like(phase)
    out[i0:] = np.unwrap(phase[i0:])
    out[: i0 + 1] = np.unwrap(phase[i0::-1])[::-1]
    return out


def default_grid(p: SystemParams, points: int = 2001, span: float = 1.0, refine: int = 100):
    """``points`` uniform detunings across ``+-span*kappa_ex``, log-refined near the band edges."""
    kex = p.kappa_ex
    base = np.linspace(-span * kex, span * kex, points)
    extra = []
    if p.omega_drive > 0:
        w2 = p.omega_drive**2
        inner = (-kex + math.sqrt(kex**2 + 16 * w2)) / 4
        outer = (kex + math.sqrt(kex**2 + 16 * w2)) / 4
        step = 2 * span * kex / max(points - 1, 1)
        offsets = np.logspace(-4, 0, refine) * step
        for edge in (inner, outer):
            if edge < span * kex:
                for sgn in (-1, 1):
                    extra.append(sgn * edge + offsets)
                    extra.append(sgn * edge - offsets)
    grid = np.unique(np.concatenate([base] + extra))
    return grid


def array_spectrum(p: SystemParams, n: int | None = None, grid=None, method: str = "auto") -> SpectrumTable:
    """Spectrum of n elements (default ``p.n_elements``) on ``grid`` (default :func:`default_grid`).

    At detunings where a single element is perfectly reflecting (lossless
    transmission zero) the first element already blocks everything, so the
    exact limits ``t_N = 0`` and ``r_N = r`` are used there.
    """
    n = p.n_elements if n is None else int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    delta = default_grid(p) if grid is None else np.asarray(grid, dtype=float)
    if delta.ndim != 1 or np.any(np.diff(delta) <= 0):
        raise ValueError("grid must be one-dimensional and strictly increasing")

    r_el = reflection(delta, p)
    blocked = np.abs(transmission(delta, p)) < SINGULAR_T
    r = np.array(r_el, dtype=complex)
    t = np.zeros(delta.shape, dtype=complex)
    ok = ~blocked
    if np.any(ok):
        d = delta[ok]
        mhat, ls, _ = cascade_scaled(d, p, n, method)
        m21 = mhat[..., 1, 0]
        m22 = mhat[..., 1, 1]
        if np.any(np.abs(m22) < UNDERFLOW_GUARD):
            raise FloatingPointError("M_N(2,2) underflow: cascade is numerically degenerate")
        r[ok] = -m21 / m22
        # drop the trailing free span: reference plane right after the last element
        t[ok] = np.exp(-1j * free_phase(d, p) - ls) / m22
    return SpectrumTable(delta=delta, r=r, t=t, n=n)


def effective_wavevector(delta, p: SystemParams, n: int = 2):
    """Numeric ``k_eff * d`` from ``t_n = exp(i k_eff n d)``, t_n = 1/M_n(2,2) including all n spans.

    The branch is anchored at the free phase, valid for detunings where
    ``arg t_n`` moves less than pi from ``n * phase_per_cell``.
    """
    mhat, ls, _ = cascade_scaled(delta, p, n, "squaring")
    t = np.exp(-ls) / mhat[..., 1, 1]
    anchor = n * p.phase_per_cell
    rel = t * np.exp(-1j * anchor)
    return (anchor + np.angle(rel) - 1j * np.log(np.abs(rel))) / n


# ---------------------------------------------------------------- k_eff series

@dataclass(frozen=True)
class KeffSeries:
    """Coefficients of ``k_eff*d = c0 + c1 d + c2 d^2 + c3 d^3`` (delta powers)."""

    c0: complex
    c1: complex
    c2: complex
    c3: complex

    def __call__(self, delta):
        delta = np.asarray(delta, dtype=float)
        return self.c0 + delta * (self.c1 + delta * (self.c2 + delta * self.c3))

    @property
    def group_delay_per_cell(self) -> float:
        return float(np.real(self.c1))


def keff_series(p: SystemParams) -> KeffSeries:
    """Near-resonance effective wavevector per cell, as derived from two-block transmission.

    The cubic coefficient is that of the two-block transmission phase; the
    Bloch wavevector of the infinite array has a different cubic term (see
    :func:`bloch_series`).
    """
    w2 = p.omega_drive**2
    if w2 == 0:
        raise ValueError("k_eff series undefined without optomechanical drive")
    kex, kin = p.kappa_ex, p.kappa_in
    return KeffSeries(
        c0=p.phase_per_cell,
        c1=kex / (2 * w2),
        c2=1j * kex * kin / (4 * w2**2),
        c3=(2 * kex**3 - 3 * kex * kin**2 + 12 * kex * w2) / (24 * w2**3),
    )


def bloch_series(p: SystemParams) -> KeffSeries:
    """Taylor series of the Bloch wavevector ``K(delta) d`` for k0 d = pi/2 (mod 2 pi), gamma_m = 0.

    Differs from :func:`keff_series` only in the cubic coefficient, by
    ``-kex^3 / (16 Omega^6)``.
    """
    w2 = p.omega_drive**2
    if w2 == 0:
        raise ValueError("Bloch series undefined without optomechanical drive")
    kex, kin = p.kappa_ex, p.kappa_in
    return KeffSeries(
        c0=p.phase_per_cell,
        c1=kex / (2 * w2),
        c2=1j * kex * kin / (4 * w2**2),
        c3=kex * (kex**2 + 24 * w2 - 6 * kin**2) / (48 * w2**3),
    )


# ---------------------------------------------------------------- bandwidth limits

@dataclass(frozen=True)
class BandwidthLimits:
    absorption: float
    dispersion: float
    band: float

    @property
    def usable(self) -> float:
        return min(self.absorption, self.dispersion)

    @property
    def binding(self) -> str:
        return "absorption" if self.absorption < self.dispersion else "dispersion"


def bandwidth_limits(p: SystemParams, n: int | None = None) -> BandwidthLimits:
    """Bandwidths over which absorption and dispersion stay negligible, plus the full polariton band."""
    n = p.n_elements if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    w2 = p.omega_drive**2
    kex, kin = p.kappa_ex, p.kappa_in
    absorption = 2 * math.sqrt(2) * w2 / math.sqrt(n * kex * kin) if kin > 0 else math.inf
    dispersion = 2 * (6 * math.pi) ** (1 / 3) * w2 / (kex * n ** (1 / 3))
    return BandwidthLimits(absorption=absorption, dispersion=dispersion, band=4 * w2 / p.kappa)


@dataclass(frozen=True)
class BandwidthDelay:
    absorption_arm: float
    dispersion_arm: float
    full_band: float

    @property
    def product(self) -> float:
        return min(self.absorption_arm, self.dispersion_arm)

    @property
    def binding(self) -> str:
        return "absorption" if self.absorption_arm < self.dispersion_arm else "dispersion"


def bandwidth_delay_product(p: SystemParams, n: int | None = None) -> BandwidthDelay:
    """Static bandwidth-delay product and its distortion-tolerant counterpart.

    ``full_band`` is the band half-width ``2 Omega^2/kappa`` times the delay,
    i.e. ``N kappa_ex / kappa``, which tends to N for negligible intrinsic loss.
    """
    n = p.n_elements if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    kex, kin = p.kappa_ex, p.kappa_in
    absorption = math.sqrt(2 * n * kex / kin) if kin > 0 else math.inf
    dispersion = (6 * math.pi * n**2) ** (1 / 3)
    return BandwidthDelay(absorption, dispersion, n * kex / p.kappa)


def crossover_n(loading_ratio: float) -> float:
    """Array size where the absorption and dispersion arms are equal, for ``kappa_ex/kappa_in = loading_ratio``.

    Below it the dispersion arm is smaller (binding); above it absorption binds.
    """
    return 2 * loading_ratio**3 / (9 * math.pi**2)


@dataclass(frozen=True)
class MeasuredBandwidthDelay:
    bandwidth: float
    delay: float

    @property
    def product(self) -> float:
        return self.bandwidth * self.delay


def measured_bandwidth_delay(
    p: SystemParams, n: int, grid=None, min_transmittance: float = 0.5, delay_factor: float = 2.0
) -> MeasuredBandwidthDelay:
    """Usable bandwidth read off a computed spectrum, times the on-resonance group delay.

    The window is the contiguous detuning range around zero where
    ``|t_N|^2 >= min_transmittance`` and the group delay stays within
    ``[tau0/delay_factor, tau0*delay_factor]``.
    """
    if grid is None:
        half = 3.0 * p.omega_drive**2 / p.kappa_ex
        grid = np.linspace(-half, half, 20001)
    spec = array_spectrum(p, n, grid)
    delta = spec.delta
    gd = spec.group_delay
    i0 = int(np.argmin(np.abs(delta)))
    tau0 = float(gd[i0])
    good = (spec.transmittance >= min_transmittance) & (gd >= tau0 / delay_factor) & (gd <= tau0 * delay_factor)
    if not good[i0]:
        return MeasuredBandwidthDelay(0.0, tau0)
    hi = i0
    while hi + 1 < delta.size and good[hi + 1]:
        hi += 1
    lo = i0
    while lo - 1 >= 0 and good[lo - 1]:
        lo -= 1
    return MeasuredBandwidthDelay(float(delta[hi] - delta[lo]), tau0)
