"""Rate-equation noise budget: sideband cooling and heating, mechanical energy, output noise, pump heating and pump delivery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cascade import write_csv
from .constants import HBAR, K_B, TWO_PI
from .errors import BandGapError, UnstableDynamicsError
from .model import SystemParams
from .twoport import TwoPortMatrix, eig2


def thermal_occupation(omega_m: float, T: float) -> float:
    """Bose occupation ``1/(exp(hbar omega_m / k_B T) - 1)``; zero at T = 0."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0:
        return 0.0
    x = HBAR * omega_m / (K_B * T)
    return 1.0 / math.expm1(x)


def pump_photons(p: SystemParams) -> float:
    return (p.omega_drive / p.h_coupling) ** 2


def bath_temperature(p: SystemParams) -> float:
    """Base temperature plus pump heating, ``T0 + chi (Omega/h)^2``."""
    return p.t_base + p.chi * pump_photons(p)


def cooling_rates(delta_L, p: SystemParams):
    """Anti-Stokes (cooling) and Stokes (heating) scattering rates at laser detuning ``delta_L``.

    Returns ``(gamma_minus, gamma_plus)`` with
    ``gamma_-+ = kappa Omega^2 / ((delta_L +- omega_m)^2 + (kappa/2)^2)``.
    """
    k = p.kappa
    w2 = p.omega_drive**2
    dl = np.asarray(delta_L, dtype=float)
    g_minus = k * w2 / ((dl + p.omega_m) ** 2 + (0.5 * k) ** 2)
    g_plus = k * w2 / ((dl - p.omega_m) ** 2 + (0.5 * k) ** 2)
    return g_minus, g_plus


def gamma_opt(p: SystemParams) -> float:
    return 4.0 * p.omega_drive**2 / p.kappa


def stokes_fraction(p: SystemParams) -> float:
    """``Gamma_+ / Gamma_-`` at the red-sideband drive, ``kappa^2/(kappa^2 + 16 omega_m^2)``."""
    k2 = p.kappa**2
    return k2 / (k2 + 16.0 * p.omega_m**2)


@dataclass(frozen=True)
class EnergyModel:
    """Linear model ``dE/dt = -rate * E + source`` for the mean mechanical energy."""

    rate: float
    source: float

    @property
    def steady_state(self) -> float:
        return self.source / self.rate

    def __call__(self, t, e0: float = 0.0):
        t = np.asarray(t, dtype=float)
        e_ss = self.steady_state
        return e_ss + (e0 - e_ss) * np.exp(-self.rate * t)

    def derivative(self, e):
        return -self.rate * np.asarray(e) + self.source


def energy_model(p: SystemParams, T_b: float | None = None) -> EnergyModel:
    """Mechanical energy balance under red-sideband driving, with thermal bath and Stokes heating."""
    T_b = bath_temperature(p) if T_b is None else T_b
    nth = thermal_occupation(p.omega_m, T_b)
    g_opt = gamma_opt(p)
    g_plus = g_opt * stokes_fraction(p)
    rate = p.gamma_m + g_opt - g_plus
    if rate <= 0:
        raise UnstableDynamicsError("Stokes heating exceeds total damping: mechanical energy runs away")
    quantum = HBAR * p.omega_m
    return EnergyModel(rate=rate, source=quantum * (p.gamma_m * nth + g_plus))


def mech_energy(p: SystemParams, T_b: float | None = None, t=None, e0: float = 0.0):
    """Steady-state mechanical energy (``t`` omitted) or its exact transient from ``e0``."""
    model = energy_model(p, T_b)
    if t is None:
        return model.steady_state
    return model(t, e0)


@dataclass(frozen=True)
class NoisePower:
    """Output noise power of an N-element array.

    ``approx`` is the sum of a thermal and a Stokes term valid for
    ``Gamma_opt >> gamma_m``; ``bound`` follows from the steady-state energy.
    Both include the factor 2 for the Stokes sideband when it is not filtered.
    """

    approx: float
    bound: float
    thermal_term: float
    stokes_term: float
    filtered: bool = True


def noise_power(p: SystemParams, n: int | None = None, T_b: float | None = None, filtered: bool = True) -> NoisePower:
    n = p.n_elements if n is None else n
    T_b = bath_temperature(p) if T_b is None else T_b
    nth = thermal_occupation(p.omega_m, T_b)
    k = p.kappa
    prefactor = 0.5 * n * HBAR * p.omega1 * p.kappa_ex / k
    sideband = 1.0 if filtered else 2.0
    thermal = sideband * prefactor * p.gamma_m * nth
    stokes = sideband * prefactor * gamma_opt(p) * (k / (4 * p.omega_m)) ** 2
    e_ss = mech_energy(p, T_b)
    bound = sideband * 0.5 * gamma_opt(p) * e_ss * n * (p.omega1 / p.omega_m) * (p.kappa_ex / k)
    return NoisePower(approx=thermal + stokes, bound=bound, thermal_term=thermal, stokes_term=stokes, filtered=filtered)


def photon_pulse_power(p: SystemParams, bandwidth: float, noise: NoisePower | float | None = None):
    """Power of a train of single-photon pulses filling ``bandwidth`` (angular), and its ratio to the noise.

    Returns ``(P_ph, ratio)``; ``ratio`` is None when no noise value is given.
    """
    if bandwidth < 0:
        raise ValueError("bandwidth must be non-negative")
    p_ph = HBAR * p.omega1 * bandwidth
    if noise is None:
        return p_ph, None
    p_n = noise.approx if isinstance(noise, NoisePower) else float(noise)
    return p_ph, (p_ph / p_n if p_n > 0 else math.inf)


@dataclass(frozen=True)
class NoiseReport:
    n_th: float
    T_b: float
    gamma_opt: float
    gamma_plus: float
    E_ss: float
    P_noise: float
    P_ph: float
    ratio: float

    def summary(self) -> str:
        lines = [
            f"n_th          {self.n_th:.6g}",
            f"T_b [K]       {self.T_b:.6g}",
            f"Gamma_opt/2pi [Hz] {self.gamma_opt / (2 * math.pi):.6g}",
            f"Gamma_+/2pi [Hz]   {self.gamma_plus / (2 * math.pi):.6g}",
            f"E_ss [J]      {self.E_ss:.6g}",
            f"P_noise [W]   {self.P_noise:.6g}",
            f"P_ph [W]      {self.P_ph:.6g}",
            f"P_ph/P_noise  {self.ratio:.6g}",
        ]
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def noise_report(p: SystemParams, bandwidth: float, n: int | None = None, filtered: bool = True) -> NoiseReport:
    T_b = bath_temperature(p)
    pn = noise_power(p, n, T_b, filtered)
    p_ph, ratio = photon_pulse_power(p, bandwidth, pn)
    g = gamma_opt(p)
    return NoiseReport(
        n_th=thermal_occupation(p.omega_m, T_b),
        T_b=T_b,
        gamma_opt=g,
        gamma_plus=g * stokes_fraction(p),
        E_ss=mech_energy(p, T_b),
        P_noise=pn.approx,
        P_ph=p_ph,
        ratio=ratio,
    )


# ---------------------------------------------------------------- pump delivery

def pump_beta(delta_p, p: SystemParams):
    """Element parameter of a bare side-coupled pump cavity, ``(kappa_ex/2)/(kappa_in/2 - i delta)``."""
    d = np.asarray(delta_p, dtype=float)
    return 0.5 * p.kappa_ex / (0.5 * p.kappa_in - 1j * d)


def pump_gap_edges(p: SystemParams):
    """Edges ``(lower, upper)`` of the lossless pump band gap for the cell phase ``phase_per_cell``."""
    phi = p.phase_per_cell
    s, c = math.sin(phi), math.cos(phi)
    if abs(s) < 1e-15:
        return (0.0, 0.0)
    e1 = p.kappa_ex * s / (2 * (1 - c))
    e2 = p.kappa_ex * s / (2 * (-1 - c))
    return (min(e1, e2), max(e1, e2))


def _pump_cell(delta_p, p: SystemParams):
    b = pump_beta(delta_p, p)
    kd = p.phase_per_cell + np.asarray(delta_p, dtype=float) * p.cell_transit
    e = np.exp(1j * kd)
    return TwoPortMatrix.from_entries(e * (1 - b), -e * b, b / e, (1 + b) / e), b, kd


def pump_attenuation(delta_p, p: SystemParams):
    """Per-cell amplitude attenuation ``Im(K d)`` of the pump's bare-cavity Bloch mode."""
    _, b, kd = _pump_cell(delta_p, p)
    c = np.cos(kd) - 1j * b * np.sin(kd)
    K = np.arccos(np.asarray(c, dtype=complex))
    return np.abs(K.imag)


def pump_attenuation_approx(delta_p, p: SystemParams):
    d = np.asarray(delta_p, dtype=float)
    return p.kappa_ex * p.kappa_in / (4.0 * d**2)


@dataclass(frozen=True)
class PumpReport:
    delta_p: float
    flux: float
    power: float
    alpha: float
    alpha_approx: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def pump_requirements(delta_p: float, n_pump_photons: float, p: SystemParams) -> PumpReport:
    """Right-going photon flux and input power needed to hold ``n_pump_photons`` in each pump cavity.

    The flux uses the forward Bloch eigenvector ``(s11, s21)`` of the bare-cavity
    unit cell, ``Phi_R = kappa_ex/(2|beta1|^2) (|s11|^2 - |s21|^2)/|s11 + s21|^2 n``.

    Raises
    ------
    BandGapError
        If ``delta_p`` lies in the pump band gap.
    """
    lo, hi = pump_gap_edges(p)
    if lo <= delta_p <= hi:
        raise BandGapError(
            f"pump detuning {delta_p:.6g} rad/s lies in the pump band gap [{lo:.6g}, {hi:.6g}] rad/s", edges=(lo, hi)
        )
    m, b, _ = _pump_cell(np.array([delta_p]), p)
    lam, S = eig2(m.data)
    k = int(np.argmin(np.abs(lam[0])))
    s11, s21 = S[0, 0, k], S[0, 1, k]
    flux = (p.kappa_ex / (2 * abs(b[0]) ** 2)) * (abs(s11) ** 2 - abs(s21) ** 2) / abs(s11 + s21) ** 2 * n_pump_photons
    flux = max(float(flux), 0.0)
    return PumpReport(
        delta_p=float(delta_p),
        flux=flux,
        power=HBAR * p.omega1 * flux,
        alpha=float(pump_attenuation(delta_p, p)),
        alpha_approx=float(pump_attenuation_approx(delta_p, p)),
    )


def pump_scan(p: SystemParams, deltas, n_pump_photons: float | None = None) -> list:
    """Pump reports over detunings outside the gap: the power versus attenuation trade-off."""
    n2 = pump_photons(p) if n_pump_photons is None else n_pump_photons
    return [pump_requirements(float(d), n2, p) for d in deltas]


def write_pump_csv(path, reports, ordinary: bool = False):
    scale, name = (TWO_PI, "delta_p/2pi") if ordinary else (1.0, "delta_p")
    write_csv(
        path,
        {
            name: [r.delta_p / scale for r in reports],
            "P_in": [r.power for r in reports],
            "alpha": [r.alpha for r in reports],
            "alpha_approx": [r.alpha_approx for r in reports],
        },
    )
