"""Energy drift, energy-identity residual and tracer error under joint h, dt refinement.

    python scripts/refinement_study.py --sizes 64 128 256 --t-end 2
"""
import argparse
import time

import numpy as np

from heatns import config as cfgmod
from heatns.cli import execute
from heatns.diagnostics import flow_map_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128])
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--dt-max", type=float, default=0.01, help="dt_max at the first size; halved per doubling")
    args = ap.parse_args()

    print(f"{'n':>5} {'dt_max':>8} {'steps':>6} {'runtime':>8} {'energy drift':>13} {'sum|r| [0,1]':>13} "
          f"{'flow map err':>13}")
    dt = args.dt_max
    for n in args.sizes:
        cfg = cfgmod.build_config({"scenario.name": "vacuum", "grid.nx": str(n), "grid.ny": str(n),
                                   "time.t_end": str(args.t_end), "time.dt_max": str(dt)})
        t0 = time.perf_counter()
        res = execute(cfg, write=False)
        runtime = time.perf_counter() - t0
        t = np.array([r.t for r in res.records])
        E = np.array([r.E_total for r in res.records])
        r = np.array([r.energy_residual for r in res.records])
        drift = np.max(np.abs(E / E[0] - 1))
        rsum = np.abs(r[(t > 0) & (t <= 1 + 1e-12)]).sum()
        err, spread = flow_map_experiment(n)
        print(f"{n:5d} {dt:8.4g} {res.manifest['steps']:6d} {runtime:7.1f}s {drift:13.4e} {rsum:13.4e} "
              f"{err / spread:13.4e}")
        dt /= 2


if __name__ == "__main__":
    main()
