#!/usr/bin/env python3
"""Sobolev membership tables around the critical exponents.

For each singular family a grid of exponents is classified; the dyadic
increment table of every divergent integral is written as CSV.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from qgrowth import field_kernel as fk
from qgrowth import regularity_lab as rl
from qgrowth.quadrature import increments_csv

GRIDS = [(fk.loglog4d(), 2, [1.5, 2.0, 2.5]),
         (fk.sinlog_second(4), 1, [2.0, 3.0, 3.5, 3.9, 4.0, 4.5]),
         (fk.sinlog_fourth(6), 2, [2.0, 2.5, 2.9, 3.0, 3.5])]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = []
    for f, k, grid in GRIDS:
        for p in grid:
            v = rl.sobolev_membership(f, k, p)
            table.append({"family": f.family, "n": f.n, "k": k, "p": p, "verdict": v.verdict})
            print(f"{f.family:18s} n={f.n} W^{k},{p:<4g} {v.verdict}")
            if v.increments:
                (out / f"increments_{f.family}_n{f.n}_k{k}_p{p:g}.csv").write_text(
                    increments_csv(v.increments))
    (out / "membership.json").write_text(json.dumps(table, indent=2) + "\n")
    crit = rl.sobolev_membership(fk.sinlog_second(4), 1, 4.0)
    target = 32 * np.pi**2 * np.log(2)
    print(f"critical increments / (32 pi^2 log 2): {np.array(crit.increments[:5]) / target}")


if __name__ == "__main__":
    main()
