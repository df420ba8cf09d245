"""Time stepping of the heat-conducting variable-density incompressible system.

One step is split as: density transport, temperature transport with the
same mass fluxes, momentum advection, implicit viscosity, variable-density
projection, then implicit heat conduction with viscous heating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import mesh
from .linsolve import SolverParams, WeightedGram, diffusion_matrix, face_coefficients, poisson_matrix
from .mesh import Grid, MacVelocity, ScalarField


class InvariantError(RuntimeError):
    """A discrete bound or constraint was violated beyond tolerance."""


@dataclass(frozen=True)
class PhysParams:
    alpha: float = 0.0
    beta: float = 0.0
    cv: float = 1.0
    rho_floor: float = 1e-6  # fraction of max(rho0), only where 1/rho appears
    cfl: float = 0.4
    dt_max: float = 1e-2
    solver: SolverParams = field(default_factory=SolverParams)
    check_invariants: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.cv != 1.0:
            raise ValueError("cv is normalised to 1")
        if not 0.0 < self.rho_floor <= 1e-4:
            raise ValueError("rho_floor must lie in (0, 1e-4]")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")


@dataclass
class State:
    rho: ScalarField
    u: MacVelocity
    theta: ScalarField
    p: ScalarField
    t: float = 0.0
    # bounds inherited from the initial data
    rho_tilde: float | None = None
    theta_lower: float | None = None

    def __post_init__(self):
        if self.rho_tilde is None:
            self.rho_tilde = float(self.rho.values.max())
        if self.theta_lower is None:
            self.theta_lower = float(self.theta.values.min())

    @property
    def grid(self) -> Grid:
        return self.rho.grid


def mu_of(theta: ScalarField, alpha: float) -> ScalarField:
    return _power(theta, alpha)


def kappa_of(theta: ScalarField, beta: float) -> ScalarField:
    return _power(theta, beta)


def _power(theta: ScalarField, e: float) -> ScalarField:
    if np.any(theta.values <= 0.0):
        raise ValueError("temperature must be positive")
    if e == 0:
        return theta.with_values(np.ones_like(theta.values))
    return theta.with_values(theta.values ** e)


def cfl_dt(s: State, params: PhysParams) -> float:
    """Advective time step limit; viscosity and conduction are implicit."""
    g = s.grid
    umax = np.abs(s.u.u).max()
    vmax = np.abs(s.u.v).max()
    cands = [params.dt_max]
    if umax > 0:
        cands.append(params.cfl * g.hx / umax)
    if vmax > 0:
        cands.append(params.cfl * g.hy / vmax)
    return float(min(cands))


# ---------------------------------------------------------------------------
# cached operators

@lru_cache(maxsize=8)
def _gradient(grid: Grid):
    G = mesh.gradient_matrix(grid)
    return G, G.T.tocsr()


@lru_cache(maxsize=8)
def _strain_gram(grid: Grid) -> WeightedGram:
    return WeightedGram(mesh.strain_matrix(grid))


def _viscous_weights(grid: Grid, mu: np.ndarray) -> np.ndarray:
    w_nodes = mesh.node_weights(grid) / grid.cell_area
    mu_n = mesh.cells_to_nodes(mu)
    return np.concatenate([2.0 * mu.ravel(), 2.0 * mu.ravel(), 4.0 * (mu_n * w_nodes).ravel()])


def viscous_matrix(grid: Grid, mu: np.ndarray, dt: float = 1.0,
                   rho_faces: np.ndarray | None = None) -> sp.csr_matrix:
    """``diag(rho_faces) + dt K`` where ``K`` is the half Hessian of ``sum 2 mu |D|^2``
    per unit cell area (``rho_faces`` omitted gives ``dt K``)."""
    return _strain_gram(grid).matrix(_viscous_weights(grid, mu), scale=dt, shift=rho_faces)


# ---------------------------------------------------------------------------
# sub-steps

def _momentum_advection(vel: MacVelocity) -> tuple[np.ndarray, np.ndarray]:
    """Upwind ``(u . grad) u`` on interior faces, no-slip ghosts for tangential rows."""
    g = vel.grid
    u, v = vel.u, vel.v
    hx, hy = g.hx, g.hy

    ui = u[1:-1]
    vbar = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, :-1] + v[1:, 1:])
    dx_b = (u[1:-1] - u[:-2]) / hx
    dx_f = (u[2:] - u[1:-1]) / hx
    ug = np.concatenate([-u[:, :1], u, -u[:, -1:]], axis=1)[1:-1]
    dy_b = (ug[:, 1:-1] - ug[:, :-2]) / hy
    dy_f = (ug[:, 2:] - ug[:, 1:-1]) / hy
    adv_u = ui * np.where(ui > 0, dx_b, dx_f) + vbar * np.where(vbar > 0, dy_b, dy_f)

    vi = v[:, 1:-1]
    ubar = 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:])
    dy_b = (v[:, 1:-1] - v[:, :-2]) / hy
    dy_f = (v[:, 2:] - v[:, 1:-1]) / hy
    vg = np.concatenate([-v[:1], v, -v[-1:]], axis=0)[:, 1:-1]
    dx_b = (vg[1:-1] - vg[:-2]) / hx
    dx_f = (vg[2:] - vg[1:-1]) / hx
    adv_v = vi * np.where(vi > 0, dy_b, dy_f) + ubar * np.where(ubar > 0, dx_b, dx_f)
    return adv_u, adv_v


def _transport_temperature(rho: np.ndarray, theta: np.ndarray, vel: MacVelocity, dt: float,
                           floor: float) -> np.ndarray:
    """Mass-weighted upwind transport of theta.

    Each new value is a convex combination of the old upwind values, the
    weights being the mass moved by the density update, so constants are
    kept, no new extrema appear and sum(rho theta) is conserved exactly.
    Near-vacuum cells use floored masses in the weights.
    """
    g = vel.grid

    def combine(r):
        fx, fy = mesh.upwind_fluxes(r, vel)
        fxt, fyt = mesh.upwind_fluxes(r * theta, vel)
        mass = r - dt * mesh.flux_divergence(fx, fy, g)
        energy = r * theta - dt * mesh.flux_divergence(fxt, fyt, g)
        return mass, energy

    mass, energy = combine(rho)
    out = theta.copy()
    ok = mass > floor
    out[ok] = energy[ok] / mass[ok]
    if not ok.all():
        mass_f, energy_f = combine(np.maximum(rho, floor))
        out[~ok] = energy_f[~ok] / mass_f[~ok]
    return out


def stream_function_of(vel: MacVelocity) -> np.ndarray:
    """Node stream function obtained by integrating u upward from the bottom wall."""
    g = vel.grid
    psi = np.zeros((g.nx + 1, g.ny + 1))
    psi[:, 1:] = np.cumsum(vel.u * g.hy, axis=1)
    psi[0] = psi[-1] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0
    return psi


def curl_of_stream(psi: np.ndarray, grid: Grid) -> MacVelocity:
    u = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    v = -(psi[1:] - psi[:-1]) / grid.hx
    return MacVelocity(grid, u, v)


def _regauge(p: np.ndarray, mu: np.ndarray) -> np.ndarray:
    w = 1.0 / mu
    return p - (w * p).sum() / w.sum()


def step(s: State, params: PhysParams, dt: float) -> State:
    g = s.grid
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = dt * max(np.abs(s.u.u).max() / g.hx, np.abs(s.u.v).max() / g.hy)
    if c > 1.0 + 1e-12:
        raise mesh.CourantError(c)
    sol = params.solver
    floor = params.rho_floor * s.rho_tilde
    G, Gt = _gradient(g)

    mu = mu_of(s.theta, params.alpha).values
    kappa = kappa_of(s.theta, params.beta).values

    # (1) density, conservative upwind
    rho_new = mesh.advect_scalar_upwind(s.rho, s.u, dt).values
    # temperature transport shares the density mass fluxes
    theta_adv = _transport_temperature(s.rho.values, s.theta.values, s.u, dt, floor)

    # (2) momentum advection then implicit viscosity
    adv_u, adv_v = _momentum_advection(s.u)
    ustar = np.concatenate([(s.u.u[1:-1] - dt * adv_u).ravel(), (s.u.v[:, 1:-1] - dt * adv_v).ravel()])
    rho_eps = np.maximum(rho_new, floor)
    rx, ry = mesh.arithmetic_faces(rho_eps)
    rho_f = np.concatenate([rx.ravel(), ry.ravel()])
    K = viscous_matrix(g, mu)
    A = viscous_matrix(g, mu, dt, rho_f)
    delta, _ = sol.solve(A, -dt * (K @ ustar), grid=g)
    ustar2 = ustar + delta

    # (3) projection with coefficient 1/rho on faces
    a_f = 1.0 / rho_f
    P = poisson_matrix(g, a_f)
    b = (Gt @ ustar2) / dt
    b -= b.mean()
    phi, _ = sol.solve(P, b, s.p.values.ravel(), singular=True, grid=g)
    unew = ustar2 - dt * a_f * (G @ phi)
    vel = MacVelocity.from_interior(g, unew)
    # rebuild from a stream function: discrete divergence becomes roundoff
    vel = curl_of_stream(stream_function_of(vel), g)

    # (4) viscous heating and implicit conduction
    heat = 2.0 * mu * mesh.deformation_norm_sq(vel).values
    L = poisson_matrix(g, face_coefficients(kappa))
    M = diffusion_matrix(g, rho_eps, kappa, dt)
    dtheta, _ = sol.solve(M, dt * (heat.ravel() - L @ theta_adv.ravel()), grid=g)
    theta_new = theta_adv + dtheta.reshape(g.shape)
    # gauge int p / mu(theta) = 0 with the temperature stored alongside p
    p_new = _regauge(phi.reshape(g.shape), mu_of(ScalarField(g, theta_new), params.alpha).values)

    new = State(
        rho=s.rho.with_values(rho_new),
        u=vel,
        theta=s.theta.with_values(theta_new),
        p=s.p.with_values(p_new),
        t=s.t + dt,
        rho_tilde=s.rho_tilde,
        theta_lower=s.theta_lower,
    )
    if params.check_invariants:
        check_invariants(new, params)
    return new


def check_invariants(s: State, params: PhysParams) -> None:
    if not (s.rho.is_finite() and s.theta.is_finite() and s.u.is_finite() and s.p.is_finite()):
        raise InvariantError(f"non-finite values at t={s.t:.6g}")
    rmin, rmax = s.rho.values.min(), s.rho.values.max()
    if rmin < -1e-12 or rmax > s.rho_tilde + 1e-12:
        raise InvariantError(f"density bounds violated at t={s.t:.6g}: [{rmin:.17g}, {rmax:.17g}]")
    tmin = s.theta.values.min()
    if tmin < s.theta_lower - 1e-10:
        raise InvariantError(f"temperature lower bound violated at t={s.t:.6g}: {tmin:.17g}")
    umax = s.u.max_abs()
    div = np.abs(mesh.divergence(s.u).values).max()
    if not umax > 0:
        umax = 0.0
    if div > 10.0 * params.solver.rel_tol * umax / s.grid.h:
        raise InvariantError(f"divergence {div:.3e} too large at t={s.t:.6g}")


def run(s0: State, params: PhysParams, t_end: float, observer=None) -> State:
    """Advance to ``t_end``; ``observer(prev, new, dt)`` is called after every step."""
    s = s0
    tol = 1e-12 * max(1.0, abs(t_end))
    while s.t < t_end - tol:
        dt = min(cfl_dt(s, params), t_end - s.t)
        try:
            new = step(s, params, dt)
        except Exception as err:
            err.t = s.t
            raise
        if observer is not None:
            observer(s, new, dt)
        s = new
    return s


def kinetic_energy(s: State) -> float:
    """``int rho |u|^2`` with face densities (arithmetic means of cells)."""
    g = s.grid
    rx, ry = mesh.arithmetic_faces(s.rho.values)
    e = (rx * s.u.u[1:-1] ** 2).sum() + (ry * s.u.v[:, 1:-1] ** 2).sum()
    return float(e * g.cell_area)


def dissipation(theta: ScalarField, vel: MacVelocity, alpha: float) -> float:
    """``int 4 mu(theta) |D(u)|^2``."""
    mu = mu_of(theta, alpha).values
    return float(4.0 * (mu * mesh.deformation_norm_sq(vel).values).sum() * vel.grid.cell_area)


def energy_residual(prev: State, new: State, dt: float, alpha: float) -> float:
    """Per-step defect of ``d/dt int rho|u|^2 + int 4 mu |D(u)|^2 = 0``."""
    return kinetic_energy(new) - kinetic_energy(prev) + dt * dissipation(prev.theta, new.u, alpha)
