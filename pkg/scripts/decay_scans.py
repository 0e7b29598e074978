#!/usr/bin/env python3
"""Morrey, Lorentz and oscillation scans for Hoelder test fields and the singular families.

Each scan is written as ``<name>.json`` and ``<name>.csv`` in the output directory.
"""
import argparse
import math
from pathlib import Path

from qgrowth import cli
from qgrowth import field_kernel as fk
from qgrowth import regularity_lab as rl


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--count", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for alpha in (0.3, 0.7):
        for p in (2.0, 3.0):
            cfg = rl.DecayScanConfig(None, 0.5, 0.1, args.count, ("morrey", p))
            reports[f"morrey_powerlaw_a{alpha}_p{p:g}"] = rl.morrey_scan(fk.power_law(alpha, 4), cfg)
        cfg = rl.DecayScanConfig(None, 1.0, 0.5, args.count)
        reports[f"lorentz_powerlaw_a{alpha + 1}"] = rl.lorentz_ball_decay(fk.power_law(alpha + 1, 4), cfg)
    singular = {"loglog4": fk.loglog4d(), "sinlog2nd": fk.sinlog_second(4), "sinlog4th": fk.sinlog_fourth(6)}
    for name, f in singular.items():
        radii = [math.exp(-2) * 10.0**-k for k in range(args.count)]
        reports[f"oscillation_{name}"] = rl.oscillation_scan(f, None, radii)
        cfg = rl.DecayScanConfig(None, math.exp(-2), 0.1, args.count, hessian=f.family == fk.SINLOG_FOURTH)
        reports[f"lorentz_{name}"] = rl.lorentz_ball_decay(f, cfg)
    for name, rep in reports.items():
        (out / f"{name}.json").write_text(cli.dumps(rep.to_json()))
        (out / f"{name}.csv").write_text(rep.to_csv())
        fit = "none" if rep.fit is None else f"slope {rep.fit.slope:.4f} ({rep.fit.label})"
        print(f"{name:32s} first {rep.values[0]:.5g} last {rep.values[-1]:.5g} fit {fit}")


if __name__ == "__main__":
    main()
