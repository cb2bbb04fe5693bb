"""Capture, hold and release of a light pulse in a lossless array, with and without mechanical damping."""

import argparse
from pathlib import Path

import numpy as np

from omarray.dynamics import default_protocol, run_protocol, storage_metrics
from omarray.model import get_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/storage"))
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--gamma-m", type=float, default=1e-3)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    p = get_preset("FIG1").replace(kappa_in=0.0, gamma_m=0.0, cell_transit=0.0, n_elements=args.n)
    proto = default_protocol(p)
    run = run_protocol(p, proto)
    m = storage_metrics(run, pulse=proto.pulse)
    run.to_csv(args.out / "storage.csv", max_rows=20000)
    print(f"lossless: efficiency {m.efficiency:.4f}, fidelity {m.fidelity:.4f}, "
          f"ledger residual {run.ledger_residual().max():.2e}")

    lossy = p.replace(gamma_m=args.gamma_m)
    rows = []
    for hold in (0.0, 100.0, 300.0, 1000.0):
        pr = default_protocol(lossy, hold=hold)
        rows.append((hold, storage_metrics(run_protocol(lossy, pr), pulse=pr.pulse).efficiency))
    rows = np.array(rows)
    np.savetxt(args.out / "decay.csv", np.column_stack([rows, rows[:, 1] / rows[0, 1], np.exp(-args.gamma_m * rows[:, 0])]),
               delimiter=",", header="hold,efficiency,ratio,exp(-gamma_m hold)", comments="")
    for hold, eff in rows:
        print(f"hold {hold:7.1f}: efficiency {eff:.4f}, expected ratio {np.exp(-args.gamma_m * hold):.4f}")


if __name__ == "__main__":
    main()
