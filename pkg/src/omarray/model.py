"""Physical parameters of one array element plus array geometry and thermal model.

All rates and frequencies are angular (rad/s). Ordinary frequencies only appear
at the I/O boundary, through keys carrying a ``_2pi`` suffix.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .constants import TWO_PI
from .errors import ValidationError


@dataclass(frozen=True)
class SystemParams:
    omega1: float
    omega_m: float
    kappa_ex: float
    kappa_in: float
    gamma_m: float
    omega_drive: float
    h_coupling: float
    n_elements: int = 1
    phase_per_cell: float = math.pi / 2
    cell_transit: float = 0.0
    t_base: float = 0.0
    chi: float = 0.0

    @property
    def kappa(self) -> float:
        return self.kappa_ex + self.kappa_in

    @property
    def q_m(self) -> float:
        return self.omega_m / self.gamma_m if self.gamma_m > 0 else math.inf

    @classmethod
    def from_quality_factors(cls, *, omega1, omega_m, kappa_ex, q_1, q_m, **kw):
        """Build params from loaded-optics quality factors ``Q1 = omega1/kappa_in`` and ``Qm = omega_m/gamma_m``."""
        return cls(
            omega1=omega1,
            omega_m=omega_m,
            kappa_ex=kappa_ex,
            kappa_in=omega1 / q_1,
            gamma_m=omega_m / q_m,
            **kw,
        )

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple = ()
    warnings: tuple = ()

    def raise_if_failed(self):
        if not self.ok:
            raise ValidationError("; ".join(self.errors))


@dataclass(frozen=True)
class DerivedRates:
    kappa: float
    gamma_opt: float
    delay_per_cell: float
    tau_delay: float
    group_velocity_cells: float
    slow_band_width: float
    pump_photons: float
    sideband_ratio: float
    drive_ratio: float


_POSITIVE = ("omega1", "omega_m", "kappa_ex", "h_coupling")
_NON_NEGATIVE = ("kappa_in", "gamma_m", "omega_drive", "cell_transit", "t_base", "chi")

# Distance (rad) from the nearest odd multiple of pi/2 tolerated without warning.
PHASE_WARN_TOL = 0.05


def validate_params(p: SystemParams) -> ValidationReport:
    errors = []
    warnings = []
    for name in _POSITIVE:
        v = getattr(p, name)
        if not (math.isfinite(v) and v > 0):
            errors.append(f"{name} must be a positive finite rate (got {v!r})")
    for name in _NON_NEGATIVE:
        v = getattr(p, name)
        if not (math.isfinite(v) and v >= 0):
            errors.append(f"{name} must be non-negative and finite (got {v!r})")
    if int(p.n_elements) != p.n_elements or p.n_elements < 1:
        errors.append(f"n_elements must be a positive integer (got {p.n_elements!r})")
    if not (math.isfinite(p.phase_per_cell) and p.phase_per_cell > 0):
        errors.append(f"phase_per_cell must be positive (got {p.phase_per_cell!r})")

    if not errors:
        if p.omega_drive > p.kappa:
            warnings.append(
                f"weak-driving condition violated: Omega_m/kappa = {p.omega_drive / p.kappa:.3g} > 1; "
                "noise rate equations are not valid here"
            )
        if p.kappa / p.omega_m > 1:
            warnings.append(f"poor sideband resolution: kappa/omega_m = {p.kappa / p.omega_m:.3g} > 1")
        offset = (p.phase_per_cell - math.pi / 2) % math.pi
        dist = min(offset, math.pi - offset)
        if dist > PHASE_WARN_TOL:
            warnings.append(
                f"phase_per_cell is {dist:.3g} rad from an odd multiple of pi/2; reflections will not cancel"
            )
    return ValidationReport(ok=not errors, errors=tuple(errors), warnings=tuple(warnings))


def derived_rates(p: SystemParams) -> DerivedRates:
    om2 = p.omega_drive**2
    kappa = p.kappa
    if om2 > 0:
        delay_per_cell = p.kappa_ex / (2.0 * om2)
        vg = 2.0 * om2 / p.kappa_ex
    else:
        delay_per_cell = math.inf
        vg = 0.0
    return DerivedRates(
        kappa=kappa,
        gamma_opt=4.0 * om2 / kappa,
        delay_per_cell=delay_per_cell,
        tau_delay=p.n_elements * delay_per_cell,
        group_velocity_cells=vg,
        slow_band_width=4.0 * om2 / p.kappa_ex,
        pump_photons=(p.omega_drive / p.h_coupling) ** 2,
        sideband_ratio=kappa / p.omega_m,
        drive_ratio=p.omega_drive / kappa,
    )


# ---------------------------------------------------------------- presets

def _hz(f):
    return TWO_PI * f


_W1 = _hz(200e12)
_WM = _hz(10e9)

PRESETS: Mapping[str, SystemParams] = MappingProxyType(
    {
        # Natural units with kappa_ex = 1.
        "FIG1": SystemParams(
            omega1=1.0e5,
            omega_m=10.0,
            kappa_ex=1.0,
            kappa_in=0.1,
            gamma_m=0.0,
            omega_drive=0.1,
            h_coupling=1.0e-3,
            n_elements=1,
            phase_per_cell=math.pi / 2,
            cell_transit=1.0e-3,
        ),
        "PAPER_DEVICE": SystemParams.from_quality_factors(
            omega1=_W1,
            omega_m=_WM,
            kappa_ex=_hz(1.1e9),
            q_1=3e6,
            q_m=1e3,
            omega_drive=_hz(130e6),
            h_coupling=_hz(0.35e6),
            n_elements=275,
            cell_transit=2.0e-14,
            t_base=300.0,
            chi=0.0,
        ),
        "PAPER_DEVICE_HIGHQ": SystemParams.from_quality_factors(
            omega1=_W1,
            omega_m=_WM,
            kappa_ex=_hz(1.1e9),
            q_1=3e6,
            q_m=1e5,
            omega_drive=_hz(130e6),
            h_coupling=_hz(0.35e6),
            n_elements=275,
            cell_transit=2.0e-14,
            t_base=0.1,
            chi=2e-6,
        ),
        "OPTIMUM": SystemParams.from_quality_factors(
            omega1=_W1,
            omega_m=_WM,
            kappa_ex=_hz(1.1e9),
            q_1=3e6,
            q_m=1e5,
            omega_drive=_hz(130e6),
            h_coupling=_hz(0.346e6),
            n_elements=275,
            cell_transit=2.0e-14,
            t_base=0.1,
            chi=2e-6,
        ),
    }
)


def get_preset(name: str) -> SystemParams:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


# ---------------------------------------------------------------- config keys

_FIELD_NAMES = {f.name for f in dataclasses.fields(SystemParams)}
_FREQ_FIELDS = ("omega1", "omega_m", "kappa_ex", "kappa_in", "gamma_m", "omega_drive", "h_coupling")

CONFIG_KEYS = tuple(sorted(_FIELD_NAMES | {f + "_2pi" for f in _FREQ_FIELDS} | {"q_1", "q_m"}))


def params_from_mapping(table: Mapping, base: SystemParams | None = None) -> SystemParams:
    """Build params from a flat key/value table.

    Keys ending in ``_2pi`` are ordinary frequencies (Hz) and are multiplied by
    2*pi; bare frequency keys are angular. ``q_1`` and ``q_m`` set the intrinsic
    optical and mechanical decay from quality factors and are applied last.
    Missing keys are taken from ``base``.
    """
    unknown = set(table) - set(CONFIG_KEYS)
    if unknown:
        raise KeyError(f"unknown parameter keys: {', '.join(sorted(unknown))}")
    values = dataclasses.asdict(base) if base is not None else {}
    for key, val in table.items():
        if key.endswith("_2pi"):
            values[key[:-4]] = TWO_PI * float(val)
        elif key in _FIELD_NAMES:
            values[key] = int(val) if key == "n_elements" else float(val)
    missing = _FIELD_NAMES - set(values) - {f.name for f in dataclasses.fields(SystemParams) if f.default is not dataclasses.MISSING}
    # kappa_in / gamma_m may come from quality factors
    if "q_1" in table:
        missing.discard("kappa_in")
    if "q_m" in table:
        missing.discard("gamma_m")
    if missing:
        raise KeyError(f"missing parameter keys: {', '.join(sorted(missing))}")
    if "q_1" in table:
        values["kappa_in"] = values["omega1"] / float(table["q_1"])
    if "q_m" in table:
        values["gamma_m"] = values["omega_m"] / float(table["q_m"])
    return SystemParams(**values)


def params_to_mapping(p: SystemParams) -> dict:
    """Inverse of :func:`params_from_mapping` using ordinary-frequency keys."""
    out = {}
    for f in dataclasses.fields(SystemParams):
        v = getattr(p, f.name)
        if f.name in _FREQ_FIELDS:
            out[f.name + "_2pi"] = v / TWO_PI
        else:
            out[f.name] = v
    return out
