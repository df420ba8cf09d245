"""Preconditioned conjugate gradients for the projection and heat solves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numba import njit

from .mesh import Grid, ScalarField, gradient_matrix, harmonic_faces


class SolverError(RuntimeError):
    """CG did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")


@dataclass(frozen=True)
class SolverParams:
    rel_tol: float = 1e-10
    max_iters: int | None = None  # None -> 20 * (nx + ny)
    preconditioner: str = "ssor"
    omega: float = 1.8  # SSOR relaxation

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.preconditioner not in _PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if not 0.0 < self.omega < 2.0:
            raise ValueError("omega must lie in (0, 2)")

    def iters_for(self, grid) -> int:
        return self.max_iters if self.max_iters is not None else 20 * (grid.nx + grid.ny)

    def solve(self, A, b, x0=None, singular=False, grid=None, max_iters=None):
        its = max_iters if max_iters is not None else self.iters_for(grid)
        return pcg(A, b, x0, self.rel_tol, its, self.preconditioner, singular, omega=self.omega)


@dataclass
class CGInfo:
    iterations: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))  # relative 2-norms
    energy_errors: list = field(default_factory=list)


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    n = out.size
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        out[i] = s


NONE, JACOBI, SSOR = 0, 1, 2
_PRECONDITIONERS = {"none": NONE, "jacobi": JACOBI, "ssor": SSOR}


@njit(cache=True)
def _precondition(kind, indptr, indices, data, diag, omega, r, z):
    n = r.size
    if kind == NONE:
        for i in range(n):
            z[i] = r[i]
    elif kind == JACOBI:
        for i in range(n):
            z[i] = r[i] / diag[i]
    else:
        # symmetric SOR: forward sweep, diagonal scaling, backward sweep
        for i in range(n):
            s = r[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j < i:
                    s -= data[k] * z[j]
            z[i] = s * omega / diag[i]
        c = (2.0 - omega) / omega
        for i in range(n):
            z[i] *= c * diag[i]
        for i in range(n - 1, -1, -1):
            s = z[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j > i:
                    s -= data[k] * z[j]
            z[i] = s * omega / diag[i]


@njit(cache=True)
def _pcg_kernel(indptr, indices, data, b, x, diag, kind, omega, tol, max_iters, singular, hist):
    n = b.size
    r = np.empty(n)
    z = np.empty(n)
    Ap = np.empty(n)
    _csr_matvec(indptr, indices, data, x, Ap)
    bnorm = 0.0
    m = 0.0
    for i in range(n):
        r[i] = b[i] - Ap[i]
        bnorm += b[i] * b[i]
        m += r[i]
    bnorm = math.sqrt(bnorm)
    if singular:
        m /= n
        for i in range(n):
            r[i] -= m
    _precondition(kind, indptr, indices, data, diag, omega, r, z)
    p = z.copy()
    rz = 0.0
    rr = 0.0
    for i in range(n):
        rz += r[i] * z[i]
        rr += r[i] * r[i]
    res = math.sqrt(rr) / bnorm
    hist[0] = res
    k = 0
    while res > tol and k < max_iters:
        _csr_matvec(indptr, indices, data, p, Ap)
        pAp = 0.0
        for i in range(n):
            pAp += p[i] * Ap[i]
        if pAp <= 0.0:
            return k, res, False
        alpha = rz / pAp
        m = 0.0
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * Ap[i]
            m += r[i]
        if singular:
            m /= n
            for i in range(n):
                r[i] -= m
        _precondition(kind, indptr, indices, data, diag, omega, r, z)
        rz_new = 0.0
        rr = 0.0
        for i in range(n):
            rz_new += r[i] * z[i]
            rr += r[i] * r[i]
        beta = rz_new / rz
        for i in range(n):
            p[i] = z[i] + beta * p[i]
        rz = rz_new
        k += 1
        res = math.sqrt(rr) / bnorm
        hist[k] = res
    return k, res, True


def pcg(A, b: np.ndarray, x0: np.ndarray | None = None, rel_tol: float = 1e-10,
        max_iters: int = 1000, preconditioner: str = "jacobi", singular: bool = False,
        x_exact: np.ndarray | None = None, omega: float = 1.8) -> tuple[np.ndarray, CGInfo]:
    """Solve ``A x = b`` for symmetric positive (semi-)definite sparse ``A``.

    Stops when ``||b - A x||_2 <= rel_tol * ||b||_2``. With ``singular`` the
    constant vector spans the kernel: ``b`` must be mean-free and the
    residual is re-projected every iteration. Passing ``x_exact`` also
    records the A-norm of the error per iteration (slow, for testing).
    """
    b = np.ascontiguousarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if float(np.linalg.norm(b)) == 0.0:
        return np.zeros_like(b), CGInfo(residuals=np.zeros(1))
    A = sp.csr_matrix(A)
    A.sort_indices()
    kind = _PRECONDITIONERS[preconditioner]
    diag = A.diagonal()
    if x_exact is not None:
        return _pcg_python(A, b, x, diag, kind, omega, rel_tol, max_iters, singular, x_exact)
    hist = np.zeros(max_iters + 1)
    k, res, ok = _pcg_kernel(A.indptr, A.indices, A.data, b, x, diag, kind, omega,
                             rel_tol, max_iters, singular, hist)
    if not ok:
        raise SolverError("operator is not positive definite on the Krylov space", res, k)
    if res > rel_tol:
        raise SolverError("conjugate gradients did not converge", res, k)
    return x, CGInfo(iterations=k, residuals=hist[:k + 1])


def _pcg_python(A, b, x, diag, kind, omega, rel_tol, max_iters, singular, x_exact):
    info = CGInfo()
    hist = []
    bnorm = float(np.linalg.norm(b))

    def prec(r):
        z = np.empty_like(r)
        _precondition(kind, A.indptr, A.indices, A.data, diag, omega, r, z)
        return z

    def energy_error():
        e = x - x_exact
        if singular:
            e = e - e.mean()
        return math.sqrt(max(float(e @ (A @ e)), 0.0))

    r = b - A @ x
    if singular:
        r -= r.mean()
    z = prec(r)
    p = z.copy()
    rz = float(r @ z)
    res = float(np.linalg.norm(r)) / bnorm
    hist.append(res)
    info.energy_errors.append(energy_error())
    k = 0
    while res > rel_tol:
        if k >= max_iters:
            raise SolverError("conjugate gradients did not converge", res, k)
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if singular:
            r -= r.mean()
        z = prec(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        k += 1
        res = float(np.linalg.norm(r)) / bnorm
        hist.append(res)
        info.energy_errors.append(energy_error())
    info.iterations = k
    info.residuals = np.array(hist)
    return x, info


class WeightedGram:
    """Fast assembly of ``B.T @ diag(w) @ B`` for a fixed sparse ``B``.

    The sparsity pattern is computed once; afterwards the matrix data is a
    single sparse mat-vec applied to the weights.
    """

    def __init__(self, B: sp.spmatrix):
        B = sp.csr_matrix(B)
        B.sort_indices()
        n = B.shape[1]
        counts = np.diff(B.indptr)
        rows_r, rows_c, vals, ks = [], [], [], []
        for a in range(counts.max()):
            for c in range(counts.max()):
                k = np.nonzero(counts > max(a, c))[0]
                ia = B.indptr[k] + a
                ic = B.indptr[k] + c
                rows_r.append(B.indices[ia])
                rows_c.append(B.indices[ic])
                vals.append(B.data[ia] * B.data[ic])
                ks.append(k)
        r = np.concatenate(rows_r)
        c = np.concatenate(rows_c)
        keys = r.astype(np.int64) * n + c
        uniq, inv = np.unique(keys, return_inverse=True)
        self.shape = (n, n)
        self.indices = (uniq % n).astype(np.int32)
        row_of = uniq // n
        self.indptr = np.searchsorted(row_of, np.arange(n + 1)).astype(np.int32)
        self.map = sp.csr_matrix((np.concatenate(vals), (inv, np.concatenate(ks))),
                                 shape=(uniq.size, B.shape[0]))
        self.diag_pos = np.searchsorted(uniq, np.arange(n, dtype=np.int64) * (n + 1))

    def matrix(self, w: np.ndarray, scale: float = 1.0, shift: np.ndarray | None = None) -> sp.csr_matrix:
        """``scale * B.T diag(w) B + diag(shift)``."""
        data = scale * (self.map @ np.asarray(w, dtype=float).ravel())
        if shift is not None:
            data[self.diag_pos] += shift
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)


@lru_cache(maxsize=8)
def laplacian_gram(grid: Grid) -> WeightedGram:
    return WeightedGram(gradient_matrix(grid))


def face_coefficients(a: np.ndarray) -> np.ndarray:
    ax, ay = harmonic_faces(a)
    return np.concatenate([ax.ravel(), ay.ravel()])


def poisson_matrix(grid: Grid, face_coef: np.ndarray) -> sp.csr_matrix:
    """``-div(a grad .)`` with zero-flux walls; ``face_coef`` on interior faces."""
    return laplacian_gram(grid).matrix(face_coef)


def solve_varcoef_poisson(a: ScalarField, rhs: ScalarField, params: SolverParams = SolverParams(),
                          gauge_weight: ScalarField | None = None,
                          x0: ScalarField | None = None) -> ScalarField:
    """Solve ``-div(a grad p) = rhs - mean(rhs)`` with homogeneous Neumann walls.

    Face coefficients are harmonic means of the cell values. The free
    constant is fixed by ``sum(w p) = 0`` (``w`` defaults to 1).
    """
    g = a.grid
    if np.any(a.values <= 0.0) or not np.all(np.isfinite(a.values)):
        raise ValueError("coefficient must be positive and finite")
    A = poisson_matrix(g, face_coefficients(a.values))
    b = rhs.values.ravel() - rhs.values.mean()
    guess = None if x0 is None else x0.values.ravel()
    p, _ = params.solve(A, b, guess, singular=True, grid=g)
    p = p.reshape(g.shape)
    w = np.ones(g.shape) if gauge_weight is None else gauge_weight.values
    p = p - (w * p).sum() / w.sum()
    return ScalarField(g, p)


def diffusion_matrix(grid: Grid, rho: np.ndarray, kappa: np.ndarray, dt: float) -> sp.csr_matrix:
    """``diag(rho) + dt * (-div(kappa grad .))``, an M-matrix for rho > 0."""
    return laplacian_gram(grid).matrix(face_coefficients(kappa), scale=dt, shift=rho.ravel())


def solve_implicit_diffusion(rho: ScalarField, kappa: ScalarField, rhs: ScalarField, dt: float,
                             params: SolverParams = SolverParams()) -> ScalarField:
    """Solve ``(rho - dt div(kappa grad)) theta = rhs`` with zero-flux walls.

    The solve is done for the correction to ``rhs / rho`` so the CG error
    scales with the change over the step rather than with theta itself.
    """
    g = rho.grid
    if np.any(rho.values <= 0.0):
        raise ValueError("density must be floored to a positive value before the heat solve")
    if np.any(kappa.values <= 0.0):
        raise ValueError("conductivity must be positive")
    guess = rhs.values / rho.values
    if dt == 0.0:
        return ScalarField(g, guess)
    M = diffusion_matrix(g, rho.values, kappa.values, dt)
    b = rhs.values.ravel() - M @ guess.ravel()
    delta, _ = params.solve(M, b, grid=g)
    return ScalarField(g, guess + delta.reshape(g.shape))
