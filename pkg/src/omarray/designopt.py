"""Search over (N, kappa_ex, Omega) for the largest static bandwidth-delay product usable with single photons.

A design is feasible when a single-photon pulse train filling the usable
bandwidth outshines the output noise (``P_ph / P_noise >= min_photon_ratio``)
and the mechanical decay over the delay stays small
(``gamma_m tau <= max_gamma_tau``). The bandwidth is always set to the
smaller of the absorption and dispersion limits, so that constraint holds
with zero margin by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import noise
from .cascade import bandwidth_limits, write_csv
from .constants import HBAR, K_B, TWO_PI
from .errors import InfeasibleDesignError
from .model import SystemParams

CONSTRAINTS = ("photon", "storage", "bandwidth")


@dataclass(frozen=True)
class Constraints:
    min_photon_ratio: float = 1.0
    max_gamma_tau: float = 1.0


@dataclass(frozen=True)
class DesignBounds:
    """Search box in angular units; the defaults are N in [1, 1e4], kappa_ex/2pi in [10 MHz, 100 GHz], Omega/2pi in [1 MHz, 10 GHz]."""

    n: tuple = (1, 10_000)
    kappa_ex: tuple = (TWO_PI * 1e7, TWO_PI * 1e11)
    omega_drive: tuple = (TWO_PI * 1e6, TWO_PI * 1e10)

    def __post_init__(self):
        for name in ("n", "kappa_ex", "omega_drive"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo <= hi):
                raise ValueError(f"bounds for {name} must be finite with 0 < lo <= hi")

    def log_box(self):
        return np.log10([self.n, self.kappa_ex, self.omega_drive])


@dataclass(frozen=True)
class DesignCandidate:
    """A design point; the derived fields are filled by :func:`evaluate`."""

    n: float
    kappa_ex: float
    omega_drive: float
    bandwidth: float | None = None
    tau: float | None = None
    product: float | None = None
    T_b: float | None = None
    P_noise: float | None = None
    P_ph: float | None = None
    gamma_tau: float | None = None
    margins: dict = field(default_factory=dict, compare=False)

    @property
    def feasible_flags(self) -> dict:
        return {k: v >= 0 for k, v in self.margins.items()}

    @property
    def feasible(self) -> bool:
        return bool(self.margins) and all(self.feasible_flags.values())

    @property
    def binding(self) -> str:
        """Constraint with the smallest margin (ignoring the bandwidth definition)."""
        m = {k: v for k, v in self.margins.items() if k != "bandwidth"}
        return min(m, key=m.get)

    def summary(self) -> str:
        lines = [
            f"N                    {self.n:g}",
            f"kappa_ex/2pi [Hz]    {self.kappa_ex / TWO_PI:.6g}",
            f"Omega_m/2pi [Hz]     {self.omega_drive / TWO_PI:.6g}",
            f"bandwidth/2pi [Hz]   {self.bandwidth / TWO_PI:.6g}",
            f"tau_delay [s]        {self.tau:.6g}",
            f"bandwidth*delay      {self.product:.6g}",
            f"T_b [K]              {self.T_b:.6g}",
            f"P_noise [W]          {self.P_noise:.6g}",
            f"P_ph [W]             {self.P_ph:.6g}",
            f"gamma_m*tau          {self.gamma_tau:.6g}",
        ]
        lines += [f"margin[{k}]{' ' * (12 - len(k))}{v:.6g}" for k, v in self.margins.items()]
        lines.append(f"feasible             {self.feasible}")
        return "\n".join(lines)


def evaluate(candidate: DesignCandidate, base: SystemParams, constraints: Constraints = Constraints()) -> DesignCandidate:
    """Fill in bandwidth, delay, noise and constraint margins for one design point."""
    n, kex, om = candidate.n, candidate.kappa_ex, candidate.omega_drive
    if not (n > 0 and kex > 0 and om > 0):
        raise ValueError("candidate values must be positive")
    p = base.replace(kappa_ex=float(kex), omega_drive=float(om))
    bw = bandwidth_limits(p, n).usable
    tau = n * kex / (2 * om**2)
    T_b = noise.bath_temperature(p)
    pn = noise.noise_power(p, n, T_b).approx
    p_ph, ratio = noise.photon_pulse_power(p, bw, pn)
    gt = p.gamma_m * tau
    margins = {
        "photon": ratio / constraints.min_photon_ratio - 1.0,
        "storage": 1.0 - gt / constraints.max_gamma_tau,
        "bandwidth": 0.0,
    }
    return DesignCandidate(n, kex, om, bw, tau, bw * tau, T_b, pn, p_ph, gt, margins)


def evaluate_arrays(n, kex, om, base: SystemParams, constraints: Constraints = Constraints()):
    """Vectorized twin of :func:`evaluate`; returns a dict of broadcast arrays."""
    n, kex, om = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (n, kex, om)))
    kin = base.kappa_in
    om2 = om**2
    with np.errstate(divide="ignore"):
        absorption = 2 * math.sqrt(2) * om2 / np.sqrt(n * kex * kin) if kin > 0 else np.full(n.shape, np.inf)
    dispersion = 2 * (6 * math.pi) ** (1 / 3) * om2 / (kex * np.cbrt(n))
    bw = np.minimum(absorption, dispersion)
    tau = n * kex / (2 * om2)
    T_b = base.t_base + base.chi * (om / base.h_coupling) ** 2
    with np.errstate(divide="ignore", over="ignore"):
        nth = np.where(T_b > 0, 1.0 / np.expm1(HBAR * base.omega_m / (K_B * np.where(T_b > 0, T_b, 1.0))), 0.0)
    kappa = kex + kin
    g_opt = 4 * om2 / kappa
    pn = 0.5 * n * HBAR * base.omega1 * (kex / kappa) * (base.gamma_m * nth + g_opt * (kappa / (4 * base.omega_m)) ** 2)
    p_ph = HBAR * base.omega1 * bw
    ratio = p_ph / pn
    gt = base.gamma_m * tau
    return {
        "n": n,
        "kappa_ex": kex,
        "omega_drive": om,
        "bandwidth": bw,
        "tau": tau,
        "product": bw * tau,
        "T_b": T_b,
        "P_noise": pn,
        "P_ph": p_ph,
        "gamma_tau": gt,
        "margin_photon": ratio / constraints.min_photon_ratio - 1.0,
        "margin_storage": 1.0 - gt / constraints.max_gamma_tau,
    }


def _feasible(ev):
    return (ev["margin_photon"] >= 0) & (ev["margin_storage"] >= 0)


def axis_grid(lo, hi, points_per_decade=20, points=None, integer=False):
    """Log-spaced axis; ``points`` overrides the density. Integer axes are rounded and de-duplicated."""
    if points is None:
        decades = math.log10(hi / lo)
        points = max(2, int(math.ceil(decades * points_per_decade)) + 1)
    x = np.logspace(math.log10(lo), math.log10(hi), points)
    if integer:
        x = np.unique(np.clip(np.round(x), math.ceil(lo), math.floor(hi)))
    return x


def _pick(ev, mask):
    """Index of the best feasible entry: largest product, then smallest N, then smallest Omega."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    prod = ev["product"].ravel()[idx]
    order = np.lexsort((ev["omega_drive"].ravel()[idx], ev["n"].ravel()[idx], -prod))
    return int(idx[order[0]])


@dataclass
class OptimizationResult:
    best: DesignCandidate
    grid: dict
    bounds: DesignBounds
    constraints: Constraints
    grid_best: DesignCandidate
    evaluations: int

    def write_grid_csv(self, path):
        g = self.grid
        write_csv(
            path,
            {
                "N": g["n"].ravel(),
                "kappa_ex_2pi": g["kappa_ex"].ravel() / TWO_PI,
                "omega_drive_2pi": g["omega_drive"].ravel() / TWO_PI,
                "bandwidth_2pi": g["bandwidth"].ravel() / TWO_PI,
                "tau": g["tau"].ravel(),
                "product": g["product"].ravel(),
                "T_b": g["T_b"].ravel(),
                "P_noise": g["P_noise"].ravel(),
                "P_ph": g["P_ph"].ravel(),
                "gamma_tau": g["gamma_tau"].ravel(),
                "margin_photon": g["margin_photon"].ravel(),
                "margin_storage": g["margin_storage"].ravel(),
                "feasible": _feasible(g).ravel().astype(float),
            },
        )


def _min_feasible_omega(n, kex, om, base, constraints, lo):
    """Smallest feasible drive for fixed (n, kex), by bisection between ``lo`` and the feasible ``om``.

    The objective does not depend on Omega, so this realizes the tie-break.
    """
    def ok(x):
        return evaluate(DesignCandidate(n, kex, x), base, constraints).feasible

    if ok(lo):
        return lo
    a, b = math.log(lo), math.log(om)
    for _ in range(60):
        mid = 0.5 * (a + b)
        if ok(math.exp(mid)):
            b = mid
        else:
            a = mid
    return math.exp(b)


def optimize(
    base: SystemParams,
    bounds: DesignBounds = DesignBounds(),
    constraints: Constraints = Constraints(),
    points_per_decade: int = 20,
    grid_points: tuple | None = None,
    refine: bool = True,
    rel_tol: float = 1e-3,
    min_step: float = 1e-4,
) -> OptimizationResult:
    """Grid search followed by a log-space pattern search.

    Parameters
    ----------
    grid_points
        ``(nN, nK, nO)`` points per axis, overriding ``points_per_decade``.
    refine
        When False the best grid point is returned unchanged.
    rel_tol
        A pattern move is accepted only if it improves the product by this
        relative amount; otherwise the step is halved until ``min_step``
        (in decades).

    Raises
    ------
    InfeasibleDesignError
        No grid point is feasible; ``binding`` names the constraint that is
        violated worst at the least-infeasible point.
    """
    gp = (None, None, None) if grid_points is None else grid_points
    ax_n = axis_grid(*bounds.n, points_per_decade, gp[0], integer=True)
    ax_k = axis_grid(*bounds.kappa_ex, points_per_decade, gp[1])
    ax_o = axis_grid(*bounds.omega_drive, points_per_decade, gp[2])
    N, K, O = np.meshgrid(ax_n, ax_k, ax_o, indexing="ij")
    ev = evaluate_arrays(N, K, O, base, constraints)
    feas = _feasible(ev)
    i = _pick(ev, feas.ravel())
    if i is None:
        worst = np.minimum(ev["margin_photon"], ev["margin_storage"]).ravel()
        j = int(np.argmax(worst))
        binding = "photon" if ev["margin_photon"].ravel()[j] <= ev["margin_storage"].ravel()[j] else "storage"
        raise InfeasibleDesignError(f"no feasible design in the search box; most binding constraint: {binding}", binding=binding)
    grid_best = evaluate(DesignCandidate(float(N.ravel()[i]), float(K.ravel()[i]), float(O.ravel()[i])), base, constraints)
    evaluations = N.size
    if not refine:
        return OptimizationResult(grid_best, ev, bounds, constraints, grid_best, evaluations)

    box = bounds.log_box()
    x = np.log10([grid_best.n, grid_best.kappa_ex, grid_best.omega_drive])
    best = grid_best.product
    step = np.array([np.diff(np.log10(ax)).max() if ax.size > 1 else 0.0 for ax in (ax_n, ax_k, ax_o)])
    step = np.where(step > 0, step, 1.0 / points_per_decade)
    dirs = np.array([d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)], dtype=float)
    while True:
        trial = np.clip(x + dirs * step, box[:, 0], box[:, 1])
        tv = 10.0**trial
        e = evaluate_arrays(tv[:, 0], tv[:, 1], tv[:, 2], base, constraints)
        evaluations += len(dirs)
        ok = _feasible(e)
        gains = np.where(ok, e["product"], -np.inf)
        k = int(np.argmax(gains))
        if gains[k] > best * (1 + rel_tol):
            x, best = trial[k], gains[k]
            continue
        if step.max() <= min_step:
            break
        step = step / 2

    # integer N with re-validation, then the smallest feasible drive
    n_cont = 10.0 ** x[0]
    choices = []
    for n_int in sorted({max(math.floor(n_cont), math.ceil(bounds.n[0])), min(math.ceil(n_cont), math.floor(bounds.n[1]))}):
        kex = 10 ** x[1]
        start = next(
            (o for o in [10 ** x[2], *ax_o] if evaluate(DesignCandidate(float(n_int), kex, o), base, constraints).feasible),
            None,
        )
        if start is None:
            continue
        om = _min_feasible_omega(float(n_int), kex, start, base, constraints, bounds.omega_drive[0])
        cand = evaluate(DesignCandidate(float(n_int), kex, om), base, constraints)
        if cand.feasible:
            choices.append(cand)
    choices.append(grid_best)
    choices.sort(key=lambda c: (-c.product, c.n, c.omega_drive))
    return OptimizationResult(choices[0], ev, bounds, constraints, grid_best, evaluations)


def reference_configuration() -> SystemParams:
    """Base parameters for the single-photon design search (Q1 = 3e6, Qm = 1e5, T0 = 100 mK, chi = 2 uK)."""
    from .model import get_preset

    return get_preset("OPTIMUM")
