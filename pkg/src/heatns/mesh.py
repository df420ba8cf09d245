"""Staggered (MAC) grid geometry, fields and discrete operators.

Scalars live at cell centers, the x-velocity on vertical faces and the
y-velocity on horizontal faces. Arrays are indexed ``[i, j]`` with ``i``
along x, so a cell field has shape ``(nx, ny)``, the x-velocity
``(nx + 1, ny)`` and the y-velocity ``(nx, ny + 1)``.

All quadratures are midpoint rules on the cell (or face) volumes so that
discrete integrals, norms and energy balances share the same weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GridMismatchError(ValueError):
    """Fields defined on different grids, or arrays of the wrong shape."""


class CourantError(ValueError):
    def __init__(self, courant: float, limit: float = 1.0):
        self.courant = courant
        super().__init__(f"Courant number {courant:.6g} exceeds {limit:g}")


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("cell counts must be positive")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("extents must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def h(self) -> float:
        return min(self.hx, self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def d(self) -> float:
        """Diameter of the rectangle."""
        return math.hypot(self.lx, self.ly)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    # coordinates --------------------------------------------------------
    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.hx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.hy

    def x_nodes(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx + 1) * self.hx

    def y_nodes(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny + 1) * self.hy

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_nodes(), self.y_nodes(), indexing="ij")

    def u_faces(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_nodes(), self.y_centers(), indexing="ij")

    def v_faces(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), self.y_nodes(), indexing="ij")

    def contains(self, x: float, y: float) -> bool:
        eps = 1e-12 * max(self.lx, self.ly)
        return (self.x0 - eps <= x <= self.x0 + self.lx + eps
                and self.y0 - eps <= y <= self.y0 + self.ly + eps)


@dataclass(frozen=True)
class BC:
    """Boundary policy of a cell field: how its wall values are reconstructed."""
    kind: str = "neumann"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neumann", "dirichlet", "extrapolate"):
            raise ValueError(f"unknown boundary policy {self.kind!r}")


NEUMANN = BC("neumann")
EXTRAPOLATE = BC("extrapolate")


def dirichlet(value: float = 0.0) -> BC:
    return BC("dirichlet", float(value))


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    bc: BC = NEUMANN
    location: str = "cell"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape if self.location == "cell" else (self.grid.nx + 1, self.grid.ny + 1)
        if self.location not in ("cell", "node"):
            raise ValueError(f"unknown location {self.location!r}")
        if self.values.shape != expected:
            raise GridMismatchError(f"{self.location} field expects shape {expected}, got {self.values.shape}")

    @classmethod
    def constant(cls, grid: Grid, c: float, bc: BC = NEUMANN) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)), bc)

    @classmethod
    def from_function(cls, grid: Grid, fn, bc: BC = NEUMANN) -> "ScalarField":
        x, y = grid.centers()
        return cls(grid, np.broadcast_to(fn(x, y), grid.shape).astype(float), bc)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return replace(self, values=values)

    def copy(self) -> "ScalarField":
        return replace(self, values=self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass
class MacVelocity:
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        g = self.grid
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != (g.nx + 1, g.ny):
            raise GridMismatchError(f"u expects shape {(g.nx + 1, g.ny)}, got {self.u.shape}")
        if self.v.shape != (g.nx, g.ny + 1):
            raise GridMismatchError(f"v expects shape {(g.nx, g.ny + 1)}, got {self.v.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "MacVelocity":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    @classmethod
    def from_functions(cls, grid: Grid, fu, fv) -> "MacVelocity":
        xu, yu = grid.u_faces()
        xv, yv = grid.v_faces()
        u = np.broadcast_to(fu(xu, yu), xu.shape).astype(float)
        v = np.broadcast_to(fv(xv, yv), xv.shape).astype(float)
        return cls(grid, u, v)

    def copy(self) -> "MacVelocity":
        return MacVelocity(self.grid, self.u.copy(), self.v.copy())

    def pin_walls(self) -> "MacVelocity":
        """Zero the wall-normal components (no-slip/no-penetration)."""
        out = self.copy()
        out.u[0, :] = out.u[-1, :] = 0.0
        out.v[:, 0] = out.v[:, -1] = 0.0
        return out

    def is_no_slip(self) -> bool:
        return not (self.u[0].any() or self.u[-1].any() or self.v[:, 0].any() or self.v[:, -1].any())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def max_abs(self) -> float:
        return float(max(np.abs(self.u).max(), np.abs(self.v).max()))

    def centered(self) -> tuple[np.ndarray, np.ndarray]:
        """Components averaged to cell centers."""
        return 0.5 * (self.u[1:] + self.u[:-1]), 0.5 * (self.v[:, 1:] + self.v[:, :-1])

    def interior(self) -> np.ndarray:
        """Flattened interior-face unknowns: x-faces then y-faces."""
        return np.concatenate([self.u[1:-1].ravel(), self.v[:, 1:-1].ravel()])

    @classmethod
    def from_interior(cls, grid: Grid, x: np.ndarray) -> "MacVelocity":
        nu = (grid.nx - 1) * grid.ny
        out = cls.zeros(grid)
        out.u[1:-1] = x[:nu].reshape(grid.nx - 1, grid.ny)
        out.v[:, 1:-1] = x[nu:].reshape(grid.nx, grid.ny - 1)
        return out


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# ---------------------------------------------------------------------------
# differential operators

def divergence(vel: MacVelocity) -> ScalarField:
    g = vel.grid
    div = (vel.u[1:] - vel.u[:-1]) / g.hx + (vel.v[:, 1:] - vel.v[:, :-1]) / g.hy
    return ScalarField(g, div)


def _wall_values(f: ScalarField, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """One-sided wall derivatives (low, high) of a cell field along ``axis``."""
    g = f.grid
    h = g.hx if axis == 0 else g.hy
    a = f.values
    first = a[0] if axis == 0 else a[:, 0]
    last = a[-1] if axis == 0 else a[:, -1]
    n = a.shape[axis]
    if f.bc.kind == "neumann":
        z = np.zeros_like(first)
        return z, z.copy()
    if f.bc.kind == "dirichlet":
        return (first - f.bc.value) / (0.5 * h), (f.bc.value - last) / (0.5 * h)
    if n < 2:
        z = np.zeros_like(first)
        return z, z.copy()
    second = a[1] if axis == 0 else a[:, 1]
    penult = a[-2] if axis == 0 else a[:, -2]
    return (second - first) / h, (last - penult) / h


def grad_to_faces(p: ScalarField) -> MacVelocity:
    g = p.grid
    out = MacVelocity.zeros(g)
    out.u[1:-1] = (p.values[1:] - p.values[:-1]) / g.hx
    out.v[:, 1:-1] = (p.values[:, 1:] - p.values[:, :-1]) / g.hy
    lo, hi = _wall_values(p, 0)
    out.u[0], out.u[-1] = lo, hi
    lo, hi = _wall_values(p, 1)
    out.v[:, 0], out.v[:, -1] = lo, hi
    return out


def strain_components(vel: MacVelocity) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """D11, D22 at cell centers and D12 at grid nodes.

    Tangential wall values are taken as zero (no-slip), so the wall-node
    shear uses a half-cell one-sided difference.
    """
    g = vel.grid
    u, v = vel.u, vel.v
    d11 = (u[1:] - u[:-1]) / g.hx
    d22 = (v[:, 1:] - v[:, :-1]) / g.hy

    dudy = np.empty((g.nx + 1, g.ny + 1))
    dudy[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / g.hy
    dudy[:, 0] = u[:, 0] / (0.5 * g.hy)
    dudy[:, -1] = -u[:, -1] / (0.5 * g.hy)

    dvdx = np.empty((g.nx + 1, g.ny + 1))
    dvdx[1:-1] = (v[1:] - v[:-1]) / g.hx
    dvdx[0] = v[0] / (0.5 * g.hx)
    dvdx[-1] = -v[-1] / (0.5 * g.hx)
    return d11, d22, 0.5 * (dudy + dvdx)


def nodes_to_cells(a: np.ndarray) -> np.ndarray:
    return 0.25 * (a[:-1, :-1] + a[1:, :-1] + a[:-1, 1:] + a[1:, 1:])


def cells_to_nodes(a: np.ndarray) -> np.ndarray:
    """Average of the adjacent cells at every node (1, 2 or 4 of them)."""
    nx, ny = a.shape
    s = np.zeros((nx + 1, ny + 1))
    c = np.zeros((nx + 1, ny + 1))
    for di in (0, 1):
        for dj in (0, 1):
            s[di:di + nx, dj:dj + ny] += a
            c[di:di + nx, dj:dj + ny] += 1.0
    return s / c


def node_weights(grid: Grid) -> np.ndarray:
    wx = np.ones(grid.nx + 1)
    wx[[0, -1]] = 0.5
    wy = np.ones(grid.ny + 1)
    wy[[0, -1]] = 0.5
    return np.outer(wx, wy) * grid.cell_area


def deformation_norm_sq(vel: MacVelocity) -> ScalarField:
    """Cell-centered |D(u)|^2.

    The squared shear is averaged from the four corner nodes, which makes
    the cell sum of |D|^2 equal the node-weighted strain energy exactly.
    """
    d11, d22, d12 = strain_components(vel)
    return ScalarField(vel.grid, d11 ** 2 + d22 ** 2 + 2.0 * nodes_to_cells(d12 ** 2))


# ---------------------------------------------------------------------------
# transport

def _courant(vel: MacVelocity, dt: float) -> float:
    g = vel.grid
    return dt * max(np.abs(vel.u).max() / g.hx, np.abs(vel.v).max() / g.hy)


def upwind_fluxes(f: np.ndarray, vel: MacVelocity, periodic: bool = False):
    """Face fluxes ``u * f_upwind`` on both face families.

    Wall faces carry the wall velocity (zero under no-slip); with
    ``periodic`` the first and last x/y faces are identified.
    """
    u, v = vel.u, vel.v
    fx = np.zeros_like(u)
    fy = np.zeros_like(v)
    fx[1:-1] = np.where(u[1:-1] > 0, u[1:-1] * f[:-1], u[1:-1] * f[1:])
    fy[:, 1:-1] = np.where(v[:, 1:-1] > 0, v[:, 1:-1] * f[:, :-1], v[:, 1:-1] * f[:, 1:])
    if periodic:
        fx[0] = np.where(u[0] > 0, u[0] * f[-1], u[0] * f[0])
        fx[-1] = fx[0]
        fy[:, 0] = np.where(v[:, 0] > 0, v[:, 0] * f[:, -1], v[:, 0] * f[:, 0])
        fy[:, -1] = fy[:, 0]
    else:
        fx[0] = np.where(u[0] > 0, 0.0, u[0] * f[0])
        fx[-1] = np.where(u[-1] > 0, u[-1] * f[-1], 0.0)
        fy[:, 0] = np.where(v[:, 0] > 0, 0.0, v[:, 0] * f[:, 0])
        fy[:, -1] = np.where(v[:, -1] > 0, v[:, -1] * f[:, -1], 0.0)
    return fx, fy


def flux_divergence(fx: np.ndarray, fy: np.ndarray, grid: Grid) -> np.ndarray:
    return (fx[1:] - fx[:-1]) / grid.hx + (fy[:, 1:] - fy[:, :-1]) / grid.hy


def advect_scalar_upwind(f: ScalarField, vel: MacVelocity, dt: float,
                         periodic: bool = False) -> ScalarField:
    """First-order conservative upwind update of ``f_t + div(f u) = 0``."""
    g = _same_grid(f, vel)
    c = _courant(vel, dt)
    if c > 1.0 + 1e-12:
        raise CourantError(c)
    fx, fy = upwind_fluxes(f.values, vel, periodic)
    return f.with_values(f.values - dt * flux_divergence(fx, fy, g))


# ---------------------------------------------------------------------------
# quadrature and norms

def integrate(f: ScalarField) -> float:
    return float(f.values.sum() * f.grid.cell_area)


def weighted_integrate(w: ScalarField, f: ScalarField) -> float:
    g = _same_grid(w, f)
    return float((w.values * f.values).sum() * g.cell_area)


def _face_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[[0, -1]] = 0.5
    return w


def _h1_sq_scalar(f: ScalarField) -> float:
    g = f.grid
    a = f.values
    total = (((a[1:] - a[:-1]) / g.hx) ** 2).sum() + (((a[:, 1:] - a[:, :-1]) / g.hy) ** 2).sum()
    lo, hi = _wall_values(f, 0)
    total += 0.5 * ((lo ** 2).sum() + (hi ** 2).sum())
    lo, hi = _wall_values(f, 1)
    total += 0.5 * ((lo ** 2).sum() + (hi ** 2).sum())
    return float(total * g.cell_area)


def _h1_sq_velocity(vel: MacVelocity) -> float:
    g = vel.grid
    d11 = (vel.u[1:] - vel.u[:-1]) / g.hx
    d22 = (vel.v[:, 1:] - vel.v[:, :-1]) / g.hy
    total = ((d11 ** 2).sum() + (d22 ** 2).sum()) * g.cell_area
    # cross derivatives live on nodes; reuse the no-slip wall stencil
    z = MacVelocity.zeros(g)
    dudy = 2.0 * strain_components(MacVelocity(g, vel.u, z.v))[2]
    dvdx = 2.0 * strain_components(MacVelocity(g, z.u, vel.v))[2]
    w = node_weights(g)
    total += ((dudy ** 2 + dvdx ** 2) * w).sum()
    return float(total)


def norm(f, kind: str = "l2") -> float:
    """Discrete norms of a cell field or a MAC velocity.

    For a velocity, ``l2`` and ``h1_seminorm`` use face quadrature (the
    weights of the kinetic energy); ``l4`` and ``linf`` use the Euclidean
    magnitude of the cell-centered velocity.
    """
    if isinstance(f, MacVelocity):
        g = f.grid
        if kind == "l2":
            su = (f.u ** 2 * _face_weights(g.nx + 1)[:, None]).sum()
            sv = (f.v ** 2 * _face_weights(g.ny + 1)[None, :]).sum()
            return math.sqrt((su + sv) * g.cell_area)
        if kind == "h1_seminorm":
            return math.sqrt(_h1_sq_velocity(f))
        uc, vc = f.centered()
        mag = np.hypot(uc, vc)
        if kind == "l4":
            return float(((mag ** 4).sum() * g.cell_area) ** 0.25)
        if kind == "linf":
            return float(mag.max())
        raise ValueError(f"unknown norm {kind!r}")
    a = f.values
    if kind == "l2":
        return math.sqrt(float((a ** 2).sum() * f.grid.cell_area))
    if kind == "l4":
        return float(((a ** 4).sum() * f.grid.cell_area) ** 0.25)
    if kind == "linf":
        return float(np.abs(a).max())
    if kind == "h1_seminorm":
        return math.sqrt(_h1_sq_scalar(f))
    raise ValueError(f"unknown norm {kind!r}")


def lp_norm(f: ScalarField, p: float) -> float:
    if math.isinf(p):
        return norm(f, "linf")
    return float(((np.abs(f.values) ** p).sum() * f.grid.cell_area) ** (1.0 / p))


# ---------------------------------------------------------------------------
# point sampling

def _sample_component(a: np.ndarray, x: float, y: float, ox: float, oy: float,
                      hx: float, hy: float, wall_x: bool, wall_y: bool) -> float:
    """Bilinear sample; ``wall_*`` means the component vanishes on those walls."""
    nxa, nya = a.shape

    def weights(c, o, h, n, wall, lo_wall, hi_wall):
        s = (c - o) / h
        if wall:
            # samples at o + k h; wall at lo_wall, hi_wall with value 0
            if c <= o:
                t = (c - lo_wall) / (o - lo_wall) if o > lo_wall else 1.0
                return [(0, t)]
            last = o + (n - 1) * h
            if c >= last:
                t = (hi_wall - c) / (hi_wall - last) if hi_wall > last else 1.0
                return [(n - 1, t)]
        s = min(max(s, 0.0), n - 1.0)
        k = min(int(math.floor(s)), max(n - 2, 0))
        t = s - k
        if n == 1:
            return [(0, 1.0)]
        return [(k, 1.0 - t), (k + 1, t)]

    wxs = weights(x, ox, hx, nxa, wall_x, ox - hx / 2, ox + (nxa - 1) * hx + hx / 2)
    wys = weights(y, oy, hy, nya, wall_y, oy - hy / 2, oy + (nya - 1) * hy + hy / 2)
    return float(sum(wx * wy * a[i, j] for i, wx in wxs for j, wy in wys))


def sample_velocity_at(vel: MacVelocity, point) -> tuple[float, float]:
    """Bilinear velocity at ``point``; vanishes identically on the walls.

    Between a wall and the first row of tangential samples the component is
    interpolated towards its no-slip wall value of zero.
    """
    g = vel.grid
    x, y = float(point[0]), float(point[1])
    if not g.contains(x, y):
        raise ValueError(f"point {point} outside the domain")
    if (abs(x - g.x0) < 1e-14 * g.lx or abs(x - g.x0 - g.lx) < 1e-14 * g.lx
            or abs(y - g.y0) < 1e-14 * g.ly or abs(y - g.y0 - g.ly) < 1e-14 * g.ly):
        return 0.0, 0.0
    # u at (x0 + i hx, y0 + (j+1/2) hy); wall-normal faces already hold zeros
    ux = _sample_component(vel.u, x, y, g.x0, g.y0 + g.hy / 2, g.hx, g.hy,
                           wall_x=False, wall_y=True)
    vy = _sample_component(vel.v, x, y, g.x0 + g.hx / 2, g.y0, g.hx, g.hy,
                           wall_x=True, wall_y=False)
    return ux, vy


def sample_scalar_at(f: ScalarField, point) -> float:
    """Bilinear sample of a cell field, constant extrapolation near walls."""
    g = f.grid
    x, y = float(point[0]), float(point[1])
    if not g.contains(x, y):
        raise ValueError(f"point {point} outside the domain")
    return _sample_component(f.values, x, y, g.x0 + g.hx / 2, g.y0 + g.hy / 2, g.hx, g.hy,
                             wall_x=False, wall_y=False)


# ---------------------------------------------------------------------------
# sparse operators on interior unknowns

def _diff_1d(n_out: int, n_in: int, offset: int) -> sp.csr_matrix:
    """Rows k: x[k + offset] - x[k + offset - 1] restricted to 0 <= idx < n_in."""
    rows, cols, vals = [], [], []
    for k in range(n_out):
        for c, s in ((k + offset, 1.0), (k + offset - 1, -1.0)):
            if 0 <= c < n_in:
                rows.append(k)
                cols.append(c)
                vals.append(s)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))


def gradient_matrix(grid: Grid) -> sp.csr_matrix:
    """Cells -> interior faces. Its negative transpose is the divergence."""
    nx, ny = grid.nx, grid.ny
    gx = _diff_1d(nx - 1, nx, 1) / grid.hx
    gy = _diff_1d(ny - 1, ny, 1) / grid.hy
    return sp.vstack([sp.kron(gx, sp.identity(ny)), sp.kron(sp.identity(nx), gy)]).tocsr()


def strain_matrix(grid: Grid) -> sp.csr_matrix:
    """Interior face velocities -> (D11 cells, D22 cells, D12 nodes)."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    # centers from interior x-faces: u_{i+1} - u_i with walls removed
    dx_f2c = _diff_1d(nx, nx - 1, 0) / hx
    dy_f2c = _diff_1d(ny, ny - 1, 0) / hy
    # nodes from cell-row samples with zero wall value at half distance
    dy_c2n = _diff_1d(ny + 1, ny, 0).tolil()
    dy_c2n[0, 0] = 2.0
    dy_c2n[ny, ny - 1] = -2.0
    dy_c2n = dy_c2n.tocsr() / hy
    dx_c2n = _diff_1d(nx + 1, nx, 0).tolil()
    dx_c2n[0, 0] = 2.0
    dx_c2n[nx, nx - 1] = -2.0
    dx_c2n = dx_c2n.tocsr() / hx
    ex = sp.eye(nx + 1, nx - 1, k=-1)
    ey = sp.eye(ny + 1, ny - 1, k=-1)
    nu, nv = (nx - 1) * ny, nx * (ny - 1)
    d11 = sp.hstack([sp.kron(dx_f2c, sp.identity(ny)), sp.csr_matrix((nx * ny, nv))])
    d22 = sp.hstack([sp.csr_matrix((nx * ny, nu)), sp.kron(sp.identity(nx), dy_f2c)])
    d12 = 0.5 * sp.hstack([sp.kron(ex, dy_c2n), sp.kron(dx_c2n, ey)])
    return sp.vstack([d11, d22, d12]).tocsr()


def harmonic_faces(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic means of a positive cell coefficient on interior faces."""
    ax = 2.0 * a[1:] * a[:-1] / (a[1:] + a[:-1])
    ay = 2.0 * a[:, 1:] * a[:, :-1] / (a[:, 1:] + a[:, :-1])
    return ax, ay


def arithmetic_faces(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return 0.5 * (a[1:] + a[:-1]), 0.5 * (a[:, 1:] + a[:, :-1])


# ---------------------------------------------------------------------------
# snapshot I/O

def write_snapshot(path, name: str, grid: Grid, values: np.ndarray, t: float) -> None:
    """Text snapshot: 4 header lines then one line per row ``values[:, j]``."""
    values = np.asarray(values, dtype=float)
    lines = [
        f"# field {name}",
        f"# dims {values.shape[0]} {values.shape[1]} grid {grid.nx} {grid.ny}",
        f"# extents {grid.x0:.17g} {grid.y0:.17g} {grid.lx:.17g} {grid.ly:.17g}",
        f"# time {t:.17g}",
    ]
    for j in range(values.shape[1]):
        lines.append(" ".join(f"{x:.17g}" for x in values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class Snapshot:
    name: str
    grid: Grid
    t: float
    values: np.ndarray = field(repr=False)


def read_snapshot(path) -> Snapshot:
    lines = Path(path).read_text().splitlines()
    name = lines[0].split()[2]
    dims = lines[1].split()
    ni, nj, nx, ny = int(dims[2]), int(dims[3]), int(dims[5]), int(dims[6])
    x0, y0, lx, ly = (float(s) for s in lines[2].split()[2:6])
    t = float(lines[3].split()[2])
    rows = [np.array(ln.split(), dtype=float) for ln in lines[4:4 + nj]]
    values = np.stack(rows, axis=1)
    if values.shape != (ni, nj):
        raise GridMismatchError(f"snapshot body has shape {values.shape}, header says {(ni, nj)}")
    return Snapshot(name, Grid(nx, ny, lx, ly, x0, y0), t, values)
