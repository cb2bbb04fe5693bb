"""Pump delivery: input power and attenuation per cell versus pump detuning."""

import argparse
from pathlib import Path

import numpy as np

from omarray.model import get_preset
from omarray.noise import pump_gap_edges, pump_scan, write_pump_csv
from omarray.plot import PlotSpec, emit_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/pump"))
    ap.add_argument("--preset", default="OPTIMUM")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    p = get_preset(args.preset)
    lo, hi = pump_gap_edges(p)
    deltas = np.geomspace(1.01 * hi, 30 * p.kappa_ex, 200)
    reps = pump_scan(p, deltas)
    write_pump_csv(args.out / "pump.csv", reps)
    table = {
        "x": deltas / p.kappa_ex,
        "P": np.log10([r.power for r in reps]),
        "a": np.log10([r.alpha for r in reps]),
        "ah": np.log10([r.alpha_approx for r in reps]),
    }
    (args.out / "pump.svg").write_text(emit_plot(
        table, PlotSpec("x", ("P", "a", "ah"), "pump trade-off", "delta_p / kappa_ex", "log10 value",
                        labels=("P_in [W]", "alpha", "alpha estimate"))))
    print(f"P_in from {reps[0].power:.3g} W to {reps[-1].power:.3g} W; alpha from {reps[0].alpha:.3g} to {reps[-1].alpha:.3g}")


if __name__ == "__main__":
    main()
