"""Fitted decay rates of KE and theta_dist against sigma1, sigma2 over several windows.

    python scripts/decay_study.py --scenario uniform --t-end 4
"""
import argparse

import numpy as np

from heatns import config as cfgmod
from heatns.cli import execute
from heatns.diagnostics import fit_decay_rate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", default="uniform")
    ap.add_argument("--t-end", type=float, default=4.0)
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--alpha", type=float, default=None)
    args = ap.parse_args()

    flat = {"scenario.name": args.scenario, "time.t_end": str(args.t_end)}
    if args.beta is not None:
        flat["scenario.beta"] = str(args.beta)
    if args.alpha is not None:
        flat["scenario.alpha"] = str(args.alpha)
    res = execute(cfgmod.build_config(flat), write=False)
    k = res.constants
    t = np.array([r.t for r in res.records])
    ke = np.array([r.KE for r in res.records])
    dist = np.array([r.theta_dist for r in res.records])
    print(f"sigma1={k.sigma1:.6g} sigma2={k.sigma2:.6g} theta*={k.theta_star:.17g}")
    print(f"{'window':>14} {'KE rate':>10} {'/sigma1':>8} {'theta rate':>11} {'/sigma2':>8}")
    edges = np.arange(0.0, args.t_end + 1e-9, 0.5)
    for lo, hi in zip(edges[:-1], edges[1:]):
        row = f"[{lo:4.1f}, {hi:4.1f}]".rjust(14)
        for v, s in ((ke, k.sigma1), (dist, k.sigma2)):
            try:
                rate = fit_decay_rate((t, v), (lo, hi))
                row += f" {rate:10.4g} {rate / s:8.3g}"
            except ValueError:
                row += f" {'-':>10} {'-':>8}"
        print(row)


if __name__ == "__main__":
    main()
