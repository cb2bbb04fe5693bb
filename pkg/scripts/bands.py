"""Polariton band structure colored by how the Bloch mode is shared between waveguide, cavity and mechanics."""

import argparse
from pathlib import Path

import numpy as np

from omarray.bands import band_edges, dispersion, write_band_csv
from omarray.model import get_preset
from omarray.plot import PlotSpec, emit_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/bands"))
    ap.add_argument("--points", type=int, default=1201)
    ap.add_argument("--preset", default="FIG1")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    p = get_preset(args.preset).replace(kappa_in=0.0, gamma_m=0.0)
    edges = band_edges(p)
    grid = np.linspace(-1.5 * edges.outer, 1.5 * edges.outer, args.points)
    pts = dispersion(grid, p)
    write_band_csv(args.out / "bands.csv", pts)
    table = {"delta": grid, "K": [pt.bloch_K_times_d.real for pt in pts]}
    colors = tuple((pt.f_waveguide, pt.f_optical, pt.f_mechanical) for pt in pts)
    (args.out / "bands.svg").write_text(emit_plot(
        table, PlotSpec("delta", ("K",), "Bloch bands", "delta", "Re K d", colors=colors)))
    print(f"slow band |delta| < {edges.inner:.4g}, gap to {edges.outer:.4g}")


if __name__ == "__main__":
    main()
