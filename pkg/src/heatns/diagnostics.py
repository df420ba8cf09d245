"""Conserved and decaying quantities, decay constants, flow-map tracing and inequality ratios."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import mesh
from .dynamics import PhysParams, State, dissipation, kinetic_energy, mu_of
from .mesh import Grid, MacVelocity, ScalarField
from .scenarios import vacuum_measure

CSV_HEADER = ("t,mass,E_total,KE,grad_u_sq,min_rho,max_rho,min_theta,"
              "theta_dist,div_residual,energy_residual,vacuum_measure")
CSV_FIELDS = tuple(CSV_HEADER.split(","))
UNDEFINED = "undefined"


class DegenerateDataError(ValueError):
    pass


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# theorem constants

@dataclass(frozen=True)
class TheoremConstants:
    rho_tilde: float
    theta_lower: float
    d: float
    E0: float
    rho_bar: float
    area: float
    theta_star: float
    sigma1: float
    sigma2: float
    alpha: float
    beta: float

    def to_dict(self) -> dict:
        return asdict(self)


def decay_rates(rho_tilde: float, theta_lower: float, rho_bar: float, d: float,
                alpha: float, beta: float) -> tuple[float, float]:
    """Explicit exponents: kinetic energy rate and temperature-deviation rate."""
    base = math.pi ** 2 / (rho_tilde * d * d)
    s1 = base * theta_lower ** alpha
    s2 = base * min(0.5 * theta_lower ** beta * (1.0 + rho_tilde / rho_bar) ** -2, theta_lower ** alpha)
    return s1, s2


def total_energy(s: State) -> float:
    """``int rho theta + 1/2 int rho |u|^2``."""
    g = s.grid
    return float((s.rho.values * s.theta.values).sum() * g.cell_area + 0.5 * kinetic_energy(s))


def theorem_constants(s0: State, params: PhysParams, grid: Grid | None = None) -> TheoremConstants:
    g = grid or s0.grid
    rho_tilde = float(s0.rho.values.max())
    theta_lower = float(s0.theta.values.min())
    mass = mesh.integrate(s0.rho)
    if not mass > 0.0:
        raise DegenerateDataError("initial density has zero mean")
    rho_bar = mass / g.area
    E0 = total_energy(s0)
    s1, s2 = decay_rates(rho_tilde, theta_lower, rho_bar, g.d, params.alpha, params.beta)
    return TheoremConstants(rho_tilde=rho_tilde, theta_lower=theta_lower, d=g.d, E0=E0, rho_bar=rho_bar,
                            area=g.area, theta_star=E0 / (rho_bar * g.area), sigma1=s1, sigma2=s2,
                            alpha=params.alpha, beta=params.beta)


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class DiagRecord:
    t: float
    mass: float
    E_total: float
    KE: float
    grad_u_sq: float
    min_rho: float
    max_rho: float
    min_theta: float
    theta_dist: float
    div_residual: float
    energy_residual: float
    vacuum_measure: float

    def row(self) -> list[str]:
        return [format(getattr(self, f), ".17g") for f in CSV_FIELDS]


def compute_record(s: State, k: TheoremConstants, c0: float, energy_residual: float = 0.0) -> DiagRecord:
    return DiagRecord(
        t=float(s.t),
        mass=mesh.integrate(s.rho),
        E_total=total_energy(s),
        KE=kinetic_energy(s),
        grad_u_sq=mesh.norm(s.u, "h1_seminorm") ** 2,
        min_rho=float(s.rho.values.min()),
        max_rho=float(s.rho.values.max()),
        min_theta=float(s.theta.values.min()),
        theta_dist=float(np.abs(s.theta.values - k.theta_star).max()),
        div_residual=float(np.abs(mesh.divergence(s.u).values).max()),
        energy_residual=float(energy_residual),
        vacuum_measure=vacuum_measure(s.rho, c0),
    )


def theta_surrogate_h2(s: State, k: TheoremConstants) -> float:
    """Discrete surrogate for the H^2 temperature distance: L-inf plus H^1 seminorm."""
    dev = s.theta.with_values(s.theta.values - k.theta_star)
    return mesh.norm(dev, "linf") + mesh.norm(dev, "h1_seminorm")


class Recorder:
    """Observer collecting one record per output time.

    The energy residual of each record is the sum of the per-step defects
    ``dKE + dt int 4 mu |D|^2`` since the previous record; with
    ``output_dt = 0`` every step is recorded.
    """

    def __init__(self, s0: State, k: TheoremConstants, c0: float, alpha: float,
                 output_dt: float = 0.0, keep_step_residuals: bool = False):
        self.k = k
        self.c0 = c0
        self.alpha = alpha
        self.output_dt = output_dt
        self.records = [compute_record(s0, k, c0)]
        self._acc = 0.0
        self._next = s0.t + output_dt
        self.step_residuals: list[tuple[float, float]] | None = [] if keep_step_residuals else None

    def __call__(self, prev: State, new: State, dt: float) -> None:
        # per-step defect of the kinetic energy identity
        r = kinetic_energy(new) - kinetic_energy(prev) + dt * dissipation(prev.theta, new.u, self.alpha)
        self._acc += r
        if self.step_residuals is not None:
            self.step_residuals.append((dt, r))
        if self.output_dt <= 0 or new.t >= self._next - 1e-9 * max(self.output_dt, 1e-300):
            self.records.append(compute_record(new, self.k, self.c0, self._acc))
            self._acc = 0.0
            while self.output_dt > 0 and self._next <= new.t + 1e-9 * self.output_dt:
                self._next += self.output_dt

    def flush(self, s: State) -> None:
        """Record the final state if the cadence skipped it."""
        if self.records[-1].t < s.t:
            self.records.append(compute_record(s, self.k, self.c0, self._acc))
            self._acc = 0.0


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(",".join(r.row()) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty diagnostics file") from None
        if tuple(header) != CSV_FIELDS:
            raise SchemaError(f"unexpected header {','.join(header)!r}")
        rows = []
        for n, row in enumerate(reader, start=2):
            if len(row) != len(CSV_FIELDS):
                raise SchemaError(f"line {n}: expected {len(CSV_FIELDS)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SchemaError(f"line {n}: non-numeric entry") from None
    if not rows:
        raise SchemaError("diagnostics file has no rows")
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(CSV_FIELDS)}


# ---------------------------------------------------------------------------
# decay fitting

def fit_decay_rate(series, window: tuple[float, float]) -> float:
    """Least-squares slope of ``-log(value)`` against ``t`` inside ``window``."""
    t, v = (np.asarray(a, dtype=float) for a in _unzip(series))
    sel = (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(sel) < 8:
        raise ValueError(f"need at least 8 samples in window {window}, got {np.count_nonzero(sel)}")
    t, v = t[sel], v[sel]
    if np.any(~(v > 0)):
        raise ValueError("decay fit needs strictly positive values")
    slope = np.polyfit(t, np.log(v), 1)[0]
    return float(-slope)


def _unzip(series):
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        return series
    arr = np.asarray(series, dtype=float)
    return arr[:, 0], arr[:, 1]


# ---------------------------------------------------------------------------
# flow map

def sample_density(rho: ScalarField, point) -> float:
    return mesh.sample_scalar_at(rho, point)


def trace_flow_map(velocity_at, rho_at, seeds, times) -> float:
    """Carry tracers through ``velocity_at(t)`` with the midpoint rule on ``times``.

    Returns ``max |rho(X(t_end), t_end) - rho0(X(0))|`` over the seeds.
    """
    times = np.asarray(times, dtype=float)
    tracer = FlowMapTracer(rho_at(times[0]), seeds)
    for a, b in zip(times[:-1], times[1:]):
        tracer.advance(velocity_at(a), velocity_at(b), b - a)
    return tracer.error(rho_at(times[-1]))


class FlowMapTracer:
    """Midpoint-rule tracers; usable as a ``run`` observer."""

    def __init__(self, rho0: ScalarField, seeds):
        self.grid = rho0.grid
        self.pos = np.array(seeds, dtype=float).reshape(-1, 2)
        for x, y in self.pos:
            if not self.grid.contains(x, y):
                raise ValueError(f"seed {(x, y)} outside the domain")
        self.rho_seed = np.array([sample_density(rho0, p) for p in self.pos])

    def advance(self, vel_old: MacVelocity, vel_new: MacVelocity, dt: float) -> None:
        for n, p in enumerate(self.pos):
            u0 = mesh.sample_velocity_at(vel_old, p)
            mid = (p[0] + 0.5 * dt * u0[0], p[1] + 0.5 * dt * u0[1])
            if not self.grid.contains(*mid):
                raise RuntimeError(f"tracer left the domain at {mid}")
            ua = mesh.sample_velocity_at(vel_old, mid)
            ub = mesh.sample_velocity_at(vel_new, mid)
            q = (p[0] + 0.5 * dt * (ua[0] + ub[0]), p[1] + 0.5 * dt * (ua[1] + ub[1]))
            if not self.grid.contains(*q):
                raise RuntimeError(f"tracer left the domain at {q}")
            self.pos[n] = q

    def __call__(self, prev: State, new: State, dt: float) -> None:
        self.advance(prev.u, new.u, dt)

    def errors(self, rho: ScalarField) -> np.ndarray:
        return np.array([sample_density(rho, p) for p in self.pos]) - self.rho_seed

    def error(self, rho: ScalarField) -> float:
        return float(np.abs(self.errors(rho)).max())


def default_seeds(grid: Grid, n: int = 8, margin: float = 0.15) -> np.ndarray:
    """``n x n`` lattice of seeds inside the domain, away from the walls."""
    xs = grid.x0 + grid.lx * np.linspace(margin, 1 - margin, n)
    ys = grid.y0 + grid.ly * np.linspace(margin, 1 - margin, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def flow_map_experiment(n: int, t_end: float = 0.25, cfl: float = 0.5, seeds_per_side: int = 8,
                        center=(0.5, 0.3), radius: float = 0.35) -> tuple[float, float]:
    """Rotating-cell flow on the unit square carrying a radial density bump.

    The density is moved by the conservative upwind update and the tracers
    by the midpoint rule, both with the same steps. Returns
    ``(max tracer error, max rho0 - min rho0)``.
    """
    from .scenarios import radial_density, rotating_flow

    g = Grid(n, n, 1.0, 1.0, 0.0, 0.0)
    vel = rotating_flow(g)
    rho = radial_density(g, center=center, radius=radius)
    dt0 = cfl * g.h / vel.max_abs()
    nsteps = int(math.ceil(t_end / dt0 - 1e-12))
    dt = t_end / nsteps
    tracer = FlowMapTracer(rho, default_seeds(g, seeds_per_side))
    spread = float(rho.values.max() - rho.values.min())
    for _ in range(nsteps):
        rho = mesh.advect_scalar_upwind(rho, vel, dt)
        tracer.advance(vel, vel, dt)
    return tracer.error(rho), spread


# ---------------------------------------------------------------------------
# functional inequalities on discrete fields

def _ratio(num: float, den: float):
    if not (den > 0.0 and math.isfinite(den)):
        return UNDEFINED
    return num / den


def desjardins_ratio(rho: ScalarField, u: MacVelocity):
    """``||sqrt(rho) u||_4^2 / ((1 + ||sqrt(rho) u||_2) ||grad u||_2 sqrt(log(2 + ||grad u||_2^2)))``."""
    g = u.grid
    uc, vc = u.centered()
    m2 = rho.values * (uc ** 2 + vc ** 2)
    lhs = math.sqrt((m2 ** 2).sum() * g.cell_area)
    l2 = math.sqrt(m2.sum() * g.cell_area)
    gu = mesh.norm(u, "h1_seminorm")
    return _ratio(lhs, (1.0 + l2) * gu * math.sqrt(math.log(2.0 + gu * gu)))


def weighted_poincare_ratio(f: ScalarField, g: ScalarField, p: float = 4.0):
    """``||f||_p / (||g f||_1 + ||grad f||_2)``."""
    lhs = mesh.lp_norm(f, p)
    gf = mesh.integrate(f.with_values(np.abs(g.values * f.values)))
    return _ratio(lhs, gf + mesh.norm(f, "h1_seminorm"))


def gn_l4_ratio(u):
    """``||u||_4 / (||u||_2^{1/2} ||grad u||_2^{1/2})`` for a scalar field or velocity."""
    if isinstance(u, MacVelocity):
        l2 = math.sqrt(kinetic_energy_unit(u))
    else:
        l2 = mesh.norm(u, "l2")
    return _ratio(mesh.norm(u, "l4"), math.sqrt(l2 * mesh.norm(u, "h1_seminorm")))


def kinetic_energy_unit(u: MacVelocity) -> float:
    """``int |u|^2`` with the face quadrature of the kinetic energy (unit density)."""
    g = u.grid
    return float(((u.u[1:-1] ** 2).sum() + (u.v[:, 1:-1] ** 2).sum()) * g.cell_area)


def inequality_ratio(kind: str, **f):
    if kind == "desjardins":
        return desjardins_ratio(f["rho"], f["u"])
    if kind == "weighted_poincare":
        return weighted_poincare_ratio(f["f"], f["g"], f.get("p", 4.0))
    if kind == "gn_l4":
        return gn_l4_ratio(f["u"])
    raise ValueError(f"unknown inequality {kind!r}")


def random_fields(grid: Grid, rng: np.random.Generator, modes: int = 6, decay: float = 1.5) -> dict:
    """Resolution-independent random fields for the inequality ratios.

    Coefficients of a sine/cosine series are drawn with ``|k|^-decay``
    damping. The velocity comes from the stream function
    ``sin^2(pi xi) sin^2(pi eta) * series`` so it vanishes on the walls with
    its tangential part.
    """
    k = np.arange(1, modes + 1)
    damp = (k[:, None] ** 2 + k[None, :] ** 2) ** (-decay / 2)

    def series(x, y, kind):
        a = rng.standard_normal((modes, modes)) * damp
        xi = (x - grid.x0) / grid.lx
        eta = (y - grid.y0) / grid.ly
        fx = np.cos if kind == "cos" else np.sin
        bx = fx(np.pi * k[:, None, None] * xi[None])
        by = fx(np.pi * k[:, None, None] * eta[None])
        return np.einsum("kl,k...,l...->...", a, bx, by)

    xc, yc = grid.centers()
    xn, yn = grid.nodes()
    f = ScalarField(grid, 1.0 + series(xc, yc, "cos"))
    rho_raw = series(xc, yc, "cos")
    rho = ScalarField(grid, np.clip(rho_raw - rho_raw.mean(), 0.0, None))  # vacuum where negative
    if rho.values.max() > 0:
        rho = rho.with_values(rho.values / rho.values.max())
    gw = ScalarField(grid, np.abs(series(xc, yc, "cos")))
    xi, eta = (xn - grid.x0) / grid.lx, (yn - grid.y0) / grid.ly
    psi = np.sin(np.pi * xi) ** 2 * np.sin(np.pi * eta) ** 2 * series(xn, yn, "cos")
    psi[0] = psi[-1] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    from .dynamics import curl_of_stream
    u = curl_of_stream(psi, grid)
    return {"f": f, "g": gw, "rho": rho, "u": u}


# ---------------------------------------------------------------------------
# verification of a finished run

@dataclass
class Check:
    name: str
    status: str  # PASS | FAIL | N/A
    value: float | None
    threshold: float | None
    detail: str = ""

    def line(self) -> str:
        v = "-" if self.value is None else f"{self.value:.6g}"
        thr = "-" if self.threshold is None else f"{self.threshold:.6g}"
        return f"{self.status:4s} {self.name}: value={v} threshold={thr} {self.detail}".rstrip()


def _rate_check(name, t, v, window, target, factor, reference):
    sel = (t >= window[0]) & (t <= window[1])
    if not np.any(sel) or float(np.max(np.abs(v))) <= 1e-13 * reference:
        return Check(name, "N/A", None, factor * target, "not applicable (zero signal)")
    try:
        rate = fit_decay_rate((t, v), window)
    except ValueError as err:
        return Check(name, "N/A", None, factor * target, f"not applicable ({err})")
    ok = rate >= factor * target
    return Check(name, "PASS" if ok else "FAIL", rate, factor * target, f"window=[{window[0]:g}, {window[1]:g}]")


def verify_series(data: dict, k: TheoremConstants, ke_window=None, theta_window=None,
                  flowmap: tuple[float, float] | None = None) -> list[Check]:
    t = data["t"]
    t_end = float(t[-1])
    ke_window = ke_window or (0.5, t_end)
    theta_window = theta_window or (0.5, t_end)
    out = []
    mass = data["mass"]
    drift = float(np.max(np.abs(mass / mass[0] - 1.0)))
    out.append(Check("mass drift", "PASS" if drift <= 1e-12 else "FAIL", drift, 1e-12))
    E = data["E_total"]
    drift = float(np.max(np.abs(E / E[0] - 1.0)))
    out.append(Check("energy drift", "PASS" if drift <= 0.01 else "FAIL", drift, 0.01))
    lo = float(data["min_rho"].min())
    hi = float(data["max_rho"].max())
    tmin = float(data["min_theta"].min())
    bad = []
    if lo < -1e-12:
        bad.append(f"min rho {lo:.17g}")
    if hi > k.rho_tilde + 1e-12:
        bad.append(f"max rho {hi:.17g}")
    if tmin < k.theta_lower - 1e-10:
        bad.append(f"min theta {tmin:.17g}")
    out.append(Check("bounds", "FAIL" if bad else "PASS", None, None, "; ".join(bad)))
    out.append(_rate_check("KE decay rate vs sigma1", t, data["KE"], ke_window, k.sigma1, 0.95, abs(k.E0)))
    out.append(_rate_check("theta_dist decay rate vs sigma2", t, data["theta_dist"], theta_window,
                           k.sigma2, 0.9, abs(k.theta_star)))
    if flowmap is not None:
        err, spread = flowmap
        out.append(Check("flow map error", "PASS" if err <= 0.05 * spread else "FAIL", err, 0.05 * spread))
    return out
