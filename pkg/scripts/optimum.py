"""Constrained search for the largest bandwidth-delay product of the reference device."""

import argparse
from pathlib import Path

from omarray.designopt import optimize, reference_configuration


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/optimum"))
    ap.add_argument("--no-heating", action="store_true", help="drop pump heating of the bath")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    base = reference_configuration()
    if args.no_heating:
        base = base.replace(chi=0.0)
    res = optimize(base)
    text = res.best.summary() + f"\nevaluations {res.evaluations}"
    (args.out / "optimum.txt").write_text(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
