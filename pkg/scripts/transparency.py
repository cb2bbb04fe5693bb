"""Transparency window of one driven element and of short arrays."""

import argparse
from pathlib import Path

import numpy as np

from omarray.cascade import array_spectrum
from omarray.model import get_preset
from omarray.plot import PlotSpec, emit_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/transparency"))
    ap.add_argument("--points", type=int, default=2001)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    p = get_preset("FIG1")
    grid = np.linspace(-1.5 * p.kappa_ex, 1.5 * p.kappa_ex, args.points)
    table = {"delta": grid}
    for n in (1, 2, 10):
        table[f"T{n}"] = array_spectrum(p, n, grid).transmittance
    np.savetxt(args.out / "transparency.csv", np.column_stack(list(table.values())), delimiter=",",
               header=",".join(table), comments="")
    (args.out / "transparency.svg").write_text(emit_plot(
        table, PlotSpec("delta", ("T1", "T2", "T10"), "transmission", "delta / kappa_ex", "|t_N|^2",
                        labels=("N = 1", "N = 2", "N = 10"))))
    half = 2 * p.omega_drive**2 / p.kappa_ex
    print(f"|t(0)|^2 = {table['T1'][args.points // 2]:.12f}, window half-width estimate {half:.4g}")


if __name__ == "__main__":
    main()
