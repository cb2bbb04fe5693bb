"""Command-line front end.

Every subcommand takes its parameters from exactly one source, ``--preset``
or ``--config`` (a TOML file with a top-level ``preset`` key or a
``[params]`` table using the keys of :data:`omarray.model.CONFIG_KEYS`).
Data files are written to ``--out`` and depend only on the inputs; run
provenance goes to a ``<command>.meta.json`` sidecar.

Exit codes: 0 success, 1 usage error, 2 invalid parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, bands, cascade, designopt, dynamics, noise
from .constants import TWO_PI
from .errors import (
    BandEdgeError,
    BandGapError,
    InfeasibleDesignError,
    SingularPointError,
    StepSizeError,
    UnstableDynamicsError,
    ValidationError,
)
from .model import PRESETS, get_preset, params_from_mapping, params_to_mapping, validate_params
from .plot import PlotSpec, emit_plot

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
STORE_ROWS = 20_000
PLOT_POINTS = 2_000

BLOCKS = {
    "spectrum": {"start_2pi", "stop_2pi", "points", "n"},
    "bands": {"start_2pi", "stop_2pi", "points"},
    "store": {"n", "hold", "ramp", "width_fraction", "detuning_2pi", "dt"},
    "pump": {"start_2pi", "stop_2pi", "points", "n_pump"},
    "optimize": {
        "n_min", "n_max", "kappa_ex_2pi_min", "kappa_ex_2pi_max", "omega_drive_2pi_min", "omega_drive_2pi_max",
        "points_per_decade", "min_photon_ratio", "max_gamma_tau",
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- config

def load_config(args):
    """Return ``(params, blocks, source)`` from the command-line arguments."""
    if args.preset and args.config:
        raise UsageError("give either --preset or --config, not both")
    if args.preset:
        try:
            return get_preset(args.preset), {}, f"preset:{args.preset.upper()}"
        except KeyError as exc:
            raise ValidationError(str(exc.args[0])) from None
    if args.config:
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
        has_preset = "preset" in doc
        has_params = "params" in doc
        if has_preset == has_params:
            raise ValidationError("config must contain exactly one of a top-level 'preset' key or a [params] table")
        try:
            p = get_preset(doc["preset"]) if has_preset else params_from_mapping(doc["params"])
        except KeyError as exc:
            raise ValidationError(str(exc.args[0])) from None
        blocks = {k: v for k, v in doc.items() if k not in ("preset", "params")}
        for name, table in blocks.items():
            if name not in BLOCKS:
                raise ValidationError(f"unknown config block [{name}]")
            unknown = set(table) - BLOCKS[name]
            if unknown:
                raise ValidationError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
        return p, blocks, f"config:{args.config}"
    raise UsageError("a parameter source is required: --preset NAME or --config PATH")


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = set(fmts) - {"csv", "svg"}
    if bad or not fmts:
        raise UsageError(f"--format takes csv and/or svg (got {text!r})")
    return fmts


def _write_meta(out: Path, command: str, argv, source: str, params, extra=None):
    meta = {
        "command": command,
        "argv": list(argv),
        "source": source,
        "params": params_to_mapping(params) if params is not None else None,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        meta.update(extra)
    (out / f"{command}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _grid(block, default_lo, default_hi, default_points, cli_points=None):
    lo = TWO_PI * block["start_2pi"] if "start_2pi" in block else default_lo
    hi = TWO_PI * block["stop_2pi"] if "stop_2pi" in block else default_hi
    pts = int(cli_points or block.get("points", default_points))
    if not (hi > lo and pts >= 2):
        raise ValidationError("grid needs stop > start and at least 2 points")
    return np.linspace(lo, hi, pts)


# ---------------------------------------------------------------- commands

def cmd_spectrum(args, p, blocks, out, fmts):
    blk = blocks.get("spectrum", {})
    n = args.n or int(blk.get("n", p.n_elements))
    if "start_2pi" in blk or "stop_2pi" in blk or args.points:
        grid = _grid(blk, -args.span * p.kappa_ex, args.span * p.kappa_ex, 2001, args.points)
    else:
        grid = cascade.default_grid(p, span=args.span)
    table = cascade.array_spectrum(p, n, grid)
    if "csv" in fmts:
        table.to_csv(out / "spectrum.csv", ordinary=True)
    if "svg" in fmts:
        svg = emit_plot(
            {"x": table.delta / TWO_PI, "T": table.transmittance, "R": table.reflectance},
            PlotSpec("x", ("T", "R"), f"N = {n}", "delta/2pi", "power fraction", labels=("|t|^2", "|r|^2")),
        )
        (out / "spectrum.svg").write_text(svg)
    i0 = int(np.argmin(np.abs(table.delta)))
    print(f"N = {n}, {table.delta.size} detunings")
    print(f"|t(0)|^2 = {table.transmittance[i0]:.12g}, group delay(0) = {table.group_delay[i0]:.6g} s")
    return {"n": n}


def cmd_bands(args, p, blocks, out, fmts):
    blk = blocks.get("bands", {})
    span = args.span * p.kappa_ex
    grid = _grid(blk, -span, span, 2001, args.points)
    pts = bands.dispersion(grid, p)
    if "csv" in fmts:
        bands.write_band_csv(out / "bands.csv", pts, ordinary=True)
    if "svg" in fmts:
        svg = emit_plot(
            {"x": [q.delta / TWO_PI for q in pts], "K": [q.bloch_K_times_d.real for q in pts]},
            PlotSpec(
                "x", ("K",), "Bloch dispersion (red waveguide, green cavity, blue mechanics)", "delta/2pi", "Re K d",
                colors=tuple((q.f_waveguide, q.f_optical, q.f_mechanical) for q in pts),
            ),
        )
        (out / "bands.svg").write_text(svg)
    if p.omega_drive > 0:
        e = bands.band_edges(p)
        print(f"slow band edge/2pi = {e.inner / TWO_PI:.6g} (approx {e.inner_approx / TWO_PI:.6g})")
        print(f"outer gap edge/2pi = {e.outer / TWO_PI:.6g} (approx {e.outer_approx / TWO_PI:.6g})")
        if e.strong_driving:
            print("note: Omega_m > kappa_ex, normal-mode-splitting regime")
    return {}


def cmd_store(args, p, blocks, out, fmts):
    blk = blocks.get("store", {})
    n = args.n or int(blk.get("n", p.n_elements))
    hold = args.hold if args.hold is not None else float(blk.get("hold", 0.0))
    ramp = args.ramp if args.ramp is not None else blk.get("ramp")
    wf = args.width_fraction if args.width_fraction is not None else float(blk.get("width_fraction", 0.3))
    det = TWO_PI * float(blk.get("detuning_2pi", 0.0))
    dt = args.dt if args.dt is not None else blk.get("dt")
    proto = dynamics.default_protocol(p.replace(n_elements=n), n, hold, ramp, wf, det)
    run = dynamics.run_protocol(p, proto, n=n, dt=dt)
    m = dynamics.storage_metrics(run, pulse=proto.pulse)
    _, _, adiab = dynamics.adiabaticity_margin(p, proto.schedule)
    summary = "\n".join(
        [
            f"N                   {n}",
            f"dt [s]              {run.dt:.6g}",
            f"efficiency          {m.efficiency:.6g}",
            f"fidelity            {m.fidelity:.6g}",
            f"achieved delay [s]  {m.achieved_delay:.6g}",
            f"adiabaticity max    {adiab:.6g}",
            f"ledger residual max {run.ledger_residual().max():.3g}",
        ]
    )
    if "csv" in fmts:
        run.to_csv(out / "store.csv", max_rows=STORE_ROWS)
    (out / "store_summary.txt").write_text(summary + "\n")
    if "svg" in fmts:
        k = max(1, -(-run.times.size // PLOT_POINTS))
        svg = emit_plot(
            {"t": run.times[::k], "in": np.abs(run.source[::k]) ** 2, "out": np.abs(run.transmitted[::k]) ** 2},
            PlotSpec("t", ("in", "out"), "capture, hold, release", "t [s]", "photon flux", labels=("input", "output")),
        )
        (out / "store.svg").write_text(svg)
    print(summary)
    return {"n": n, "hold": hold}


def cmd_noise(args, p, blocks, out, fmts):
    bw = cascade.bandwidth_limits(p).usable
    rep = noise.noise_report(p, bw, filtered=not args.unfiltered)
    if "csv" in fmts:
        d = rep.as_dict()
        cascade.write_csv(out / "noise.csv", {k: [v] for k, v in d.items()})
    print(rep.summary())
    return {}


def cmd_pump(args, p, blocks, out, fmts):
    blk = blocks.get("pump", {})
    lo_gap, hi_gap = noise.pump_gap_edges(p)
    lo = TWO_PI * blk["start_2pi"] if "start_2pi" in blk else hi_gap * 1.01
    hi = TWO_PI * blk["stop_2pi"] if "stop_2pi" in blk else 30 * p.kappa_ex
    pts = int(args.points or blk.get("points", 200))
    if not (hi > lo > 0 and pts >= 2):
        raise ValidationError("pump scan needs 0 < start < stop and at least 2 points")
    deltas = np.geomspace(lo, hi, pts)
    reps = noise.pump_scan(p, deltas, blk.get("n_pump"))
    if "csv" in fmts:
        noise.write_pump_csv(out / "pump.csv", reps, ordinary=True)
    if "svg" in fmts:
        x = [r.delta_p / p.kappa_ex for r in reps]
        svg = emit_plot(
            {"x": x, "a": [math.log10(r.alpha) if r.alpha > 0 else math.nan for r in reps],
             "ah": [math.log10(r.alpha_approx) if r.alpha_approx > 0 else math.nan for r in reps],
             "P": [math.log10(r.power) if r.power > 0 else math.nan for r in reps]},
            PlotSpec("x", ("P", "a", "ah"), "pump trade-off", "delta_p / kappa_ex", "log10 value",
                     labels=("P_in [W]", "alpha", "alpha approx")),
        )
        (out / "pump.svg").write_text(svg)
    print(f"pump gap/2pi = [{lo_gap / TWO_PI:.6g}, {hi_gap / TWO_PI:.6g}]")
    print(f"{len(reps)} detunings from {lo / TWO_PI:.6g} to {hi / TWO_PI:.6g} (/2pi)")
    return {}


def cmd_optimize(args, p, blocks, out, fmts):
    blk = blocks.get("optimize", {})
    default = designopt.DesignBounds()
    bounds = designopt.DesignBounds(
        n=(float(blk.get("n_min", default.n[0])), float(blk.get("n_max", default.n[1]))),
        kappa_ex=(
            TWO_PI * blk["kappa_ex_2pi_min"] if "kappa_ex_2pi_min" in blk else default.kappa_ex[0],
            TWO_PI * blk["kappa_ex_2pi_max"] if "kappa_ex_2pi_max" in blk else default.kappa_ex[1],
        ),
        omega_drive=(
            TWO_PI * blk["omega_drive_2pi_min"] if "omega_drive_2pi_min" in blk else default.omega_drive[0],
            TWO_PI * blk["omega_drive_2pi_max"] if "omega_drive_2pi_max" in blk else default.omega_drive[1],
        ),
    )
    cons = designopt.Constraints(
        float(blk.get("min_photon_ratio", 1.0)), float(blk.get("max_gamma_tau", 1.0))
    )
    res = designopt.optimize(p, bounds, cons, int(blk.get("points_per_decade", 20)))
    lines = [
        "search box: N in [{:g}, {:g}], kappa_ex/2pi in [{:.3g}, {:.3g}] Hz, Omega_m/2pi in [{:.3g}, {:.3g}] Hz".format(
            *bounds.n, *(np.array(bounds.kappa_ex) / TWO_PI), *(np.array(bounds.omega_drive) / TWO_PI)
        ),
        f"evaluations: {res.evaluations}",
        res.best.summary(),
    ]
    text = "\n".join(lines)
    (out / "optimize_summary.txt").write_text(text + "\n")
    if args.emit_grid and "csv" in fmts:
        res.write_grid_csv(out / "optimize_grid.csv")
    print(text)
    return {"bounds": [bounds.n, bounds.kappa_ex, bounds.omega_drive]}


def cmd_validate(args, p, blocks, out, fmts):
    rep = validate_params(p)
    for w in rep.warnings:
        print(f"warning: {w}")
    for e in rep.errors:
        print(f"error: {e}")
    print("ok" if rep.ok else "invalid")
    return {}


COMMANDS = {
    "spectrum": (cmd_spectrum, "reflection/transmission spectrum of N elements"),
    "bands": (cmd_bands, "Bloch dispersion and mode occupations"),
    "store": (cmd_store, "time-domain capture, hold and release of a pulse"),
    "noise": (cmd_noise, "noise budget and single-photon comparison"),
    "pump": (cmd_pump, "pump power versus attenuation scan"),
    "optimize": (cmd_optimize, "maximize the bandwidth-delay product under noise constraints"),
    "validate": (cmd_validate, "check parameters and report warnings"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="omarray", description="Slow light and storage in optomechanical arrays.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--preset", help=f"named parameter set ({', '.join(PRESETS)})")
        sp.add_argument("--config", help="TOML file with a 'preset' key or a [params] table")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--format", default="csv", help="comma list of csv, svg (default: csv)")
        if name in ("spectrum", "store"):
            sp.add_argument("--n", type=int, help="number of elements (default: from parameters)")
        if name in ("spectrum", "bands", "pump"):
            sp.add_argument("--points", type=int, help="number of detunings")
        if name in ("spectrum", "bands"):
            sp.add_argument("--span", type=float, default=1.0, help="half-width of the grid in units of kappa_ex")
        if name == "store":
            sp.add_argument("--hold", type=float, help="storage time at zero drive [s]")
            sp.add_argument("--ramp", type=float, help="ramp duration [s]")
            sp.add_argument("--width-fraction", type=float, help="pulse width as a fraction of the array delay")
            sp.add_argument("--dt", type=float, help="integration step [s]")
        if name == "noise":
            sp.add_argument("--unfiltered", action="store_true", help="include the unfiltered Stokes sideband")
        if name == "optimize":
            sp.add_argument("--paper-333", action="store_true", help="use the single-photon design configuration")
            sp.add_argument("--emit-grid", action="store_true", help="also write the full evaluated grid")
    return parser


def dispatch(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    func = COMMANDS[args.command][0]
    try:
        fmts = _formats(args.format)
        if args.command == "optimize" and args.paper_333:
            if args.preset or args.config:
                raise UsageError("--paper-333 fixes the parameters; do not combine with --preset or --config")
            p, blocks, source = designopt.reference_configuration(), {}, "paper-333"
        else:
            p, blocks, source = load_config(args)
        report = validate_params(p)
        if args.command != "validate":
            report.raise_if_failed()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        extra = func(args, p, blocks, out, fmts)
        _write_meta(out, args.command, argv, source, p, extra)
        if args.command == "validate" and not report.ok:
            return EXIT_INVALID
        return EXIT_OK
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"omarray: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, StepSizeError, BandGapError, tomllib.TOMLDecodeError, OSError) as exc:
        print(f"omarray: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularPointError, BandEdgeError, UnstableDynamicsError, InfeasibleDesignError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"omarray: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
