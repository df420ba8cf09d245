"""Initial data: the explicit vacuum family on the unit disk, uniform and rest states."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .dynamics import State, curl_of_stream
from .mesh import Grid, MacVelocity, ScalarField


class ResolutionError(ValueError):
    """The vacuum core is too small for the requested grid."""


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "vacuum"
    density: str = "vacuum"  # vacuum | uniform
    c0: float = 0.5
    k1: float = 1.0
    k2: float = 1.0
    rho_value: float = 1.0  # level of the uniform density
    theta_min: float = 1.0
    theta_amp: float = 0.5
    theta_mode: int = 2  # k in the bump (1 - cos k pi xi)(1 - cos k pi eta) / 4
    amplitude: float = 0.5  # max |u0| on faces
    modes: tuple[int, int] = (1, 2)
    alpha: float = 0.05
    beta: float = 0.5
    nx: int = 128
    ny: int = 128
    lx: float = 2.0
    ly: float = 2.0
    x0: float = -1.0
    y0: float = -1.0

    def __post_init__(self):
        validate_spec(self)

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly, self.x0, self.y0)

    @property
    def eps(self) -> float:
        return vacuum_radius(self.c0)


def validate_spec(s: ScenarioSpec) -> None:
    if not 0.0 < s.c0 < 1.0:
        raise ValueError("c0 ∉ (0,1)")
    if not 0.0 < s.k1 < 2.0:
        raise ValueError("k1 ∉ (0,2)")
    if not 0.0 < s.k2 < 2.0:
        raise ValueError("k2 ∉ (0,2)")
    if not s.theta_min > 0.0:
        raise ValueError("theta_min must be > 0")
    if s.theta_amp < 0.0 or s.amplitude < 0.0:
        raise ValueError("theta_amp and amplitude must be >= 0")
    if s.density not in ("vacuum", "uniform"):
        raise ValueError(f"unknown density profile {s.density!r}")
    if s.density == "uniform" and not s.rho_value > 0.0:
        raise ValueError("rho_value must be > 0")
    if s.alpha < 0.0 or s.beta < 0.0:
        raise ValueError("alpha and beta must be >= 0")
    if s.theta_mode < 1:
        raise ValueError("theta_mode must be >= 1")
    if len(s.modes) != 2 or min(s.modes) < 1:
        raise ValueError("modes must be two positive integers")
    if s.nx < 1 or s.ny < 1:
        raise ValueError("nx and ny must be >= 1")


CATALOG: dict[str, ScenarioSpec] = {
    "vacuum": ScenarioSpec(),
    # theta_mode=1 puts the slowest Neumann mode into theta0
    "uniform": ScenarioSpec(name="uniform", density="uniform", amplitude=0.01, modes=(1, 1), theta_mode=1,
                            nx=64, ny=64),
    "rest": ScenarioSpec(name="rest", density="uniform", theta_amp=0.0, amplitude=0.0,
                         alpha=0.0, beta=0.0, nx=32, ny=32),
}


def get_spec(name: str, **overrides) -> ScenarioSpec:
    if name not in CATALOG:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(CATALOG)}")
    known = {f.name for f in fields(ScenarioSpec)}
    bad = set(overrides) - known
    if bad:
        raise KeyError(f"unknown scenario field(s) {sorted(bad)}")
    return replace(CATALOG[name], **overrides)


# ---------------------------------------------------------------------------
# vacuum family

def vacuum_radius(c0: float) -> float:
    """``eps = pi^{-1/2} exp(-1/(2 c0^2))``, so that ``pi eps^2 = exp(-1/c0^2)``."""
    return math.exp(-1.0 / (2.0 * c0 * c0)) / math.sqrt(math.pi)


def vacuum_profile(r, c0: float, k1: float, k2: float):
    """Radial density: 0 in the core, two power ramps meeting at c0 for r = eps, then 1."""
    r = np.asarray(r, dtype=float)
    eps = vacuum_radius(c0)
    q = c0 ** (1.0 / k2)
    inner = c0 * np.clip(2.0 * r / eps - 1.0, 0.0, None) ** k1
    outer = np.clip(2.0 * (1.0 - q) / eps * r - 2.0 + 3.0 * q, 0.0, None) ** k2
    return np.select([r <= 0.5 * eps, r <= eps, r <= 1.5 * eps], [0.0, inner, outer], 1.0)


def min_cells_for(c0: float, length: float = 2.0) -> int:
    """Smallest cell count along a side of ``length`` giving 4 cells across eps."""
    return int(math.ceil(4.0 * length / vacuum_radius(c0) - 1e-9))


def vacuum_density(spec: ScenarioSpec, grid: Grid) -> ScalarField:
    eps = vacuum_radius(spec.c0)
    tol = 1e-12
    if (grid.x0 > -1 + tol or grid.y0 > -1 + tol or grid.x0 + grid.lx < 1 - tol
            or grid.y0 + grid.ly < 1 - tol):
        raise ValueError("vacuum density needs a grid covering [-1,1]^2")
    if eps < 4.0 * max(grid.hx, grid.hy):
        nmin = max(min_cells_for(spec.c0, grid.lx), min_cells_for(spec.c0, grid.ly))
        raise ResolutionError(
            f"eps={eps:.4g} spans fewer than 4 cells at h={max(grid.hx, grid.hy):.4g}; "
            f"use at least nx=ny={nmin} on this domain")
    return ScalarField.from_function(grid, lambda x, y: vacuum_profile(np.hypot(x, y), spec.c0, spec.k1, spec.k2))


def vacuum_measure(rho0: ScalarField, c0: float) -> float:
    """Area of ``{rho0 <= c0}`` by cell counting."""
    return float(np.count_nonzero(rho0.values <= c0) * rho0.grid.cell_area)


def condition_threshold(c0: float) -> float:
    return math.exp(-1.0 / (c0 * c0))


def check_vacuum_condition(v_measure: float, c0: float) -> tuple[bool, float]:
    """Smallness of the near-vacuum set: ``|V| <= exp(-1/c0^2)``; returns (verdict, margin)."""
    margin = condition_threshold(c0) - v_measure
    return bool(margin >= 0.0), margin


# ---------------------------------------------------------------------------
# velocity and temperature

def stream_function_velocity(psi: ScalarField) -> MacVelocity:
    if psi.location != "node":
        raise ValueError("stream function must be node-valued")
    a = psi.values
    if np.any(a[0] != 0) or np.any(a[-1] != 0) or np.any(a[:, 0] != 0) or np.any(a[:, -1] != 0):
        raise ValueError("stream function must vanish on every boundary node")
    return curl_of_stream(a, psi.grid)


def _unit_coords(grid: Grid, x, y):
    return (x - grid.x0) / grid.lx, (y - grid.y0) / grid.ly


def initial_stream(spec: ScenarioSpec, grid: Grid) -> ScalarField:
    """``A sin(pi xi) sin(pi eta) sin(m pi xi) sin(n pi eta)`` scaled to max face speed ``amplitude``."""
    x, y = grid.nodes()
    xi, eta = _unit_coords(grid, x, y)
    m, n = spec.modes
    shape = np.sin(np.pi * xi) * np.sin(np.pi * eta) * np.sin(m * np.pi * xi) * np.sin(n * np.pi * eta)
    shape[0] = shape[-1] = 0.0
    shape[:, 0] = shape[:, -1] = 0.0
    psi = ScalarField(grid, shape, location="node")
    vmax = stream_function_velocity(psi).max_abs()
    scale = spec.amplitude / vmax if vmax > 0 else 0.0
    return ScalarField(grid, scale * shape, location="node")


def initial_temperature(spec: ScenarioSpec, grid: Grid) -> ScalarField:
    """Cosine bump in ``[theta_min, theta_min + theta_amp]``; zero normal derivative at the walls."""
    k = spec.theta_mode * np.pi

    def f(x, y):
        xi, eta = _unit_coords(grid, x, y)
        return spec.theta_min + spec.theta_amp * (1 - np.cos(k * xi)) * (1 - np.cos(k * eta)) / 4
    return ScalarField.from_function(grid, f)


def build_scenario(spec: ScenarioSpec) -> State:
    g = spec.grid
    if spec.density == "vacuum":
        rho = vacuum_density(spec, g)
    else:
        rho = ScalarField.constant(g, spec.rho_value)
    vel = stream_function_velocity(initial_stream(spec, g))
    theta = initial_temperature(spec, g)
    return State(rho=rho, u=vel, theta=theta, p=ScalarField.constant(g, 0.0))


# ---------------------------------------------------------------------------
# prescribed-flow fixture for the flow-map identity

def rotating_flow(grid: Grid, speed: float = 1.0) -> MacVelocity:
    """Discrete curl of ``psi = sin(pi xi) sin(pi eta)`` (a single closed-streamline cell)."""
    x, y = grid.nodes()
    xi, eta = _unit_coords(grid, x, y)
    psi = np.sin(np.pi * xi) * np.sin(np.pi * eta)
    psi[0] = psi[-1] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    # scale so the continuous speed bound is `speed`
    psi *= speed / (np.pi / min(grid.lx, grid.ly))
    return stream_function_velocity(ScalarField(grid, psi, location="node"))


def radial_density(grid: Grid, center=(0.5, 0.3), radius: float = 0.2,
                   lo: float = 0.0, hi: float = 1.0) -> ScalarField:
    """Smooth radial bump: ``hi`` at the centre, ``lo`` beyond ``radius`` (cosine taper)."""
    def f(x, y):
        r = np.hypot(x - center[0], y - center[1]) / radius
        return lo + (hi - lo) * np.where(r < 1.0, 0.5 * (1.0 + np.cos(np.pi * np.minimum(r, 1.0))), 0.0)
    return ScalarField.from_function(grid, f)
