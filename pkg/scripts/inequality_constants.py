"""Sup of the three inequality ratios over random fields at several resolutions.

    python scripts/inequality_constants.py --sizes 32 64 128 --draws 100
"""
import argparse

import numpy as np

from heatns.diagnostics import UNDEFINED, inequality_ratio, random_fields
from heatns.mesh import Grid

KINDS = ("desjardins", "weighted_poincare", "gn_l4")


def sup_ratios(n, draws):
    g = Grid(n, n)
    sup = dict.fromkeys(KINDS, 0.0)
    for seed in range(draws):
        f = random_fields(g, np.random.default_rng(seed))
        vals = (inequality_ratio("desjardins", rho=f["rho"], u=f["u"]),
                inequality_ratio("weighted_poincare", f=f["f"], g=f["g"]),
                inequality_ratio("gn_l4", u=f["u"]))
        for kind, v in zip(KINDS, vals):
            if v != UNDEFINED:
                sup[kind] = max(sup[kind], v)
    return sup


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--draws", type=int, default=100)
    args = ap.parse_args()
    print(f"{'n':>5} " + " ".join(f"{k:>18}" for k in KINDS))
    prev = None
    for n in args.sizes:
        sup = sup_ratios(n, args.draws)
        cells = []
        for k in KINDS:
            growth = f" ({sup[k] / prev[k]:.3f}x)" if prev else ""
            cells.append(f"{sup[k]:.5f}{growth}".rjust(18))
        print(f"{n:5d} " + " ".join(cells))
        prev = sup


if __name__ == "__main__":
    main()
