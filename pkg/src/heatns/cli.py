"""Command line front end: run, verify, scenarios, check-condition, ineq."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .diagnostics import (FlowMapTracer, Recorder, SchemaError, TheoremConstants, default_seeds, read_csv,
                          theorem_constants, verify_series, write_csv)
from .dynamics import InvariantError, run
from .inequalities import RangeEscapeError, SampledFunction, bihari_bound, gronwall_envelope
from .linsolve import SolverError
from .mesh import CourantError, Grid, write_snapshot
from .scenarios import (CATALOG, ScenarioSpec, build_scenario, check_vacuum_condition, condition_threshold,
                        vacuum_density, vacuum_measure, vacuum_radius)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_FAIL = 0, 2, 3, 4


@dataclass
class RunResult:
    records: list
    constants: TheoremConstants
    manifest: dict
    final: object


class _Snapshots:
    def __init__(self, out: Path, every: float):
        self.out = out
        self.every = every
        self.next = every

    def write(self, s, tag: str) -> None:
        g = s.grid
        for name, arr in (("rho", s.rho.values), ("theta", s.theta.values), ("p", s.p.values),
                          ("u", s.u.u), ("v", s.u.v)):
            write_snapshot(self.out / f"{tag}_{name}.txt", name, g, arr, s.t)

    def __call__(self, prev, new, dt) -> None:
        if self.every > 0 and new.t >= self.next - 1e-9 * self.every:
            self.write(new, f"t{new.t:.6f}")
            while self.next <= new.t + 1e-9 * self.every:
                self.next += self.every


def execute(cfg: cfgmod.RunConfig, write: bool = True) -> RunResult:
    """Build the scenario, integrate to ``t_end`` and collect records and the manifest."""
    spec = cfg.scenario
    params = cfg.phys()
    s0 = build_scenario(spec)
    k = theorem_constants(s0, params)
    V = vacuum_measure(s0.rho, spec.c0)
    holds, margin = check_vacuum_condition(V, spec.c0)
    rec = Recorder(s0, k, spec.c0, params.alpha, cfg.output_dt)
    observers = [rec]
    tracer = None
    if cfg.tracers > 0:
        tracer = FlowMapTracer(s0.rho, default_seeds(s0.grid, cfg.tracers))
        observers.append(tracer)
    out = Path(cfg.output_dir)
    snaps = None
    if write:
        (out / "snapshots").mkdir(parents=True, exist_ok=True)
        snaps = _Snapshots(out / "snapshots", cfg.snapshot_dt)
        snaps.write(s0, "init")
        observers.append(snaps)

    nsteps = 0

    def observe(prev, new, dt):
        nonlocal nsteps
        nsteps += 1
        for ob in observers:
            ob(prev, new, dt)

    t0 = time.perf_counter()
    final = run(s0, params, cfg.t_end, observe)
    rec.flush(final)
    elapsed = time.perf_counter() - t0

    manifest = {
        "config": cfg.to_flat(),
        "constants": k.to_dict(),
        "vacuum_measure": V,
        "vacuum_condition": {"c0": spec.c0, "threshold": condition_threshold(spec.c0), "holds": holds,
                         "margin": margin},
        "steps": nsteps,
        "t_final": final.t,
        "runtime_s": elapsed,
        "flowmap": None,
    }
    if tracer is not None:
        manifest["flowmap"] = {"max_error": tracer.error(final.rho),
                               "rho_range": float(s0.rho.values.max() - s0.rho.values.min()),
                               "seeds": int(tracer.pos.shape[0])}
    if write:
        write_csv(rec.records, out / "diagnostics.csv")
        snaps.write(final, "final")
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return RunResult(rec.records, k, manifest, final)


# ---------------------------------------------------------------------------
# subcommands

def _split_overrides(extra: list[str]) -> dict[str, str]:
    """``--key=value`` / ``--key value`` pairs mirroring the config keys."""
    out = {}
    i = 0
    while i < len(extra):
        a = extra[i]
        if not a.startswith("--"):
            raise cfgmod.ConfigError(a, "expected --key=value")
        a = a[2:]
        if "=" in a:
            k, v = a.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise cfgmod.ConfigError(a, "missing value")
            k, v = a, extra[i + 1]
            i += 1
        out[k.replace("-", "_") if "." not in k else k] = v
        i += 1
    return out


def cmd_run(args, extra) -> int:
    try:
        cfg = cfgmod.load(args.config, _split_overrides(extra))
    except (cfgmod.ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = execute(cfg)
    except (SolverError, InvariantError, CourantError, ArithmeticError, RuntimeError) as err:
        t = getattr(err, "t", float("nan"))
        print(f"runtime error at t={t:.6g}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    m = res.manifest
    k = res.constants
    print(f"run finished: t={m['t_final']:.6g} steps={m['steps']} runtime={m['runtime_s']:.2f}s")
    print(f"sigma1={k.sigma1:.6g} sigma2={k.sigma2:.6g} E0={k.E0:.17g} theta*={k.theta_star:.17g}")
    c = m["vacuum_condition"]
    print(f"|V|={m['vacuum_measure']:.6g} threshold={c['threshold']:.6g} "
          f"condition holds={c['holds']} margin={c['margin']:.6g}")
    print(f"wrote {Path(cfg.output_dir) / 'diagnostics.csv'}")
    return EXIT_OK


def _window(text):
    if text is None:
        return None
    a, b = (float(x) for x in text.split(","))
    return a, b


def cmd_verify(args, extra) -> int:
    if extra:
        print(f"unexpected arguments {extra}", file=sys.stderr)
        return EXIT_CONFIG
    csv_path = Path(args.csv)
    manifest_path = Path(args.manifest) if args.manifest else csv_path.parent / "manifest.json"
    try:
        data = read_csv(csv_path)
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        k = TheoremConstants(**manifest["constants"])
    except (SchemaError, OSError, KeyError, TypeError, json.JSONDecodeError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    fm = manifest.get("flowmap")
    flow = (fm["max_error"], fm["rho_range"]) if fm else None
    try:
        checks = verify_series(data, k, _window(args.ke_window), _window(args.theta_window), flow)
    except ValueError as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    for c in checks:
        print(c.line())
    failed = [c for c in checks if c.status == "FAIL"]
    print("verification " + ("FAIL" if failed else "PASS"))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_scenarios(args, extra) -> int:
    for name, s in CATALOG.items():
        dens = f"vacuum(c0={s.c0:g}, k1={s.k1:g}, k2={s.k2:g})" if s.density == "vacuum" else \
            f"uniform({s.rho_value:g})"
        print(f"{name:8s} density={dens} theta_min={s.theta_min:g} theta_amp={s.theta_amp:g} theta_mode={s.theta_mode} "
              f"amplitude={s.amplitude:g} modes={s.modes[0]},{s.modes[1]} alpha={s.alpha:g} "
              f"beta={s.beta:g} grid={s.nx}x{s.ny} on [{s.x0:g},{s.x0 + s.lx:g}]x[{s.y0:g},{s.y0 + s.ly:g}]")
    return EXIT_OK


def cmd_check_condition(args, extra) -> int:
    try:
        if args.measure is not None:
            V = args.measure
            if not 0.0 < args.c0 < 1.0:
                raise ValueError("c0 ∉ (0,1)")
        else:
            spec = ScenarioSpec(c0=args.c0, k1=args.k1, k2=args.k2, nx=args.nx, ny=args.ny or args.nx)
            V = vacuum_measure(vacuum_density(spec, spec.grid), spec.c0)
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    holds, margin = check_vacuum_condition(V, args.c0)
    print(f"c0={args.c0:.17g} eps={vacuum_radius(args.c0):.17g}")
    print(f"|V|={V:.17g} threshold={condition_threshold(args.c0):.17g}")
    print(f"condition holds={holds} margin={margin:.17g}")
    return EXIT_OK


def _read_series(path, interp) -> SampledFunction:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ValueError(f"{path}: malformed line {line!r}") from None
                continue  # header
    if not rows:
        raise ValueError(f"{path}: no data")
    a = np.array(rows)
    return SampledFunction(a[:, 0], a[:, 1], interp)


def cmd_ineq(args, extra) -> int:
    try:
        if args.kind == "gronwall":
            f2 = _read_series(args.f2, args.interp)
            c = _read_series(args.c, args.interp)
            out = gronwall_envelope(f2, c)
        else:
            h = _read_series(args.h, args.interp)
            out = bihari_bound(args.c1, args.c2, h, args.w)
    except (ValueError, OSError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except RangeEscapeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    lines = ["t,bound"] + [f"{t:.17g},{v:.17g}" for t, v in zip(out.t, out.values)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heatns", description="Heat-conducting variable-density flow simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="integrate a scenario; any config key may be given as --key=value")
    r.add_argument("--config", help="flat key=value configuration file")
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="check a diagnostics CSV against the acceptance thresholds")
    v.add_argument("csv")
    v.add_argument("manifest", nargs="?", help="run manifest (default: next to the CSV)")
    v.add_argument("--ke-window", help="t_lo,t_hi for the kinetic energy fit")
    v.add_argument("--theta-window", help="t_lo,t_hi for the temperature fit")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("scenarios", help="list the scenario catalog")
    s.set_defaults(fn=cmd_scenarios)

    c = sub.add_parser("check-condition", help="evaluate |V| <= exp(-1/c0^2) for the vacuum family")
    c.add_argument("--c0", type=float, default=0.5)
    c.add_argument("--k1", type=float, default=1.0)
    c.add_argument("--k2", type=float, default=1.0)
    c.add_argument("--nx", type=int, default=256)
    c.add_argument("--ny", type=int, default=None)
    c.add_argument("--measure", type=float, default=None, help="check a given |V| instead of building rho0")
    c.set_defaults(fn=cmd_check_condition)

    q = sub.add_parser("ineq", help="Gronwall / Bihari bounds from t,value CSV files")
    q.add_argument("kind", choices=["gronwall", "bihari"])
    q.add_argument("--f2")
    q.add_argument("--c")
    q.add_argument("--h")
    q.add_argument("--c1", type=float, default=1.0)
    q.add_argument("--c2", type=float, default=1.0)
    q.add_argument("--w", choices=["linear", "log_growth"], default="log_growth")
    q.add_argument("--interp", choices=["linear", "piecewise-constant"], default="linear")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_ineq)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.cmd == "ineq":
        need = ("f2", "c") if args.kind == "gronwall" else ("h",)
        missing = [n for n in need if getattr(args, n) is None]
        if missing:
            print(f"config error: ineq {args.kind} needs --{' --'.join(missing)}", file=sys.stderr)
            return EXIT_CONFIG
    if extra and args.cmd != "run" and args.cmd != "verify":
        print(f"config error: unexpected arguments {extra}", file=sys.stderr)
        return EXIT_CONFIG
    return args.fn(args, extra)


if __name__ == "__main__":
    sys.exit(main())
