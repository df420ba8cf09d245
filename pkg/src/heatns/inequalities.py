"""Grönwall and Bihari–LaSalle bounds evaluated on sampled data."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_trapezoid, quad
from scipy.optimize import brentq


class RangeEscapeError(ArithmeticError):
    """The Bihari bound leaves the range of G (blow-up within the horizon)."""


@dataclass(frozen=True)
class SampledFunction:
    t: np.ndarray
    values: np.ndarray
    interp: str = "linear"  # linear | piecewise-constant

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("knots and values must be 1-d arrays of equal length")
        if t.size < 1 or np.any(np.diff(t) <= 0):
            raise ValueError("knots must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if self.interp not in ("linear", "piecewise-constant"):
            raise ValueError(f"unknown interpolation {self.interp!r}")

    @classmethod
    def from_callable(cls, fn, t) -> "SampledFunction":
        t = np.asarray(t, dtype=float)
        return cls(t, np.broadcast_to(fn(t), t.shape).astype(float))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.interp == "linear":
            return np.interp(s, self.t, self.values)
        idx = np.clip(np.searchsorted(self.t, s, side="right") - 1, 0, self.t.size - 1)
        return self.values[idx]

    def integral(self) -> np.ndarray:
        """Cumulative integral from the first knot, one value per knot."""
        if self.t.size == 1:
            return np.zeros(1)
        if self.interp == "linear":
            return cumulative_trapezoid(self.values, self.t, initial=0.0)
        return np.concatenate([[0.0], np.cumsum(self.values[:-1] * np.diff(self.t))])


def gronwall_envelope(f2: SampledFunction, c: SampledFunction) -> SampledFunction:
    """``f2(t) exp(int_0^t c)`` at the knots of ``f2``."""
    dv = np.diff(f2.values)
    if np.any(dv < 0):
        i = int(np.argmax(dv < 0)) + 1
        raise ValueError(f"f2 must be non-decreasing: f2(t={f2.t[i]:.6g})={f2.values[i]:.6g} "
                         f"< f2(t={f2.t[i - 1]:.6g})={f2.values[i - 1]:.6g} (knot {i})")
    if np.any(c.values < 0):
        raise ValueError("c must be non-negative")
    cint = _integral_at(c, f2.t)
    return SampledFunction(f2.t, f2.values * np.exp(cint), f2.interp)


def _integral_at(h: SampledFunction, t: np.ndarray) -> np.ndarray:
    if h.t.shape == t.shape and np.array_equal(h.t, t):
        return h.integral()
    # resample on the union of knots, then read off at t
    knots = np.union1d(h.t, t)
    cum = SampledFunction(knots, h(knots), h.interp).integral()
    return np.interp(t, knots, cum)


def _linear(y):
    return y


def _log_growth(y):
    return y * math.log(2.0 + y)


NONLINEARITIES: dict[str, Callable[[float], float]] = {"linear": _linear, "log_growth": _log_growth}


def G(x: float, w: Callable[[float], float], x0: float) -> float:
    """``int_{x0}^{x} dy / w(y)`` by adaptive quadrature."""
    if x == x0:
        return 0.0
    val, _ = quad(lambda y: 1.0 / w(y), x0, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def G_inverse(target: float, w: Callable[[float], float], x0: float, start: float,
              g_start: float | None = None, cap: float = 1e300) -> float:
    """Solve ``G(x) = target`` for ``x >= start`` (``G`` increasing, ``G(start) <= target``).

    Passing ``g_start = G(start)`` lets the search integrate only from
    ``start``, which keeps repeated inversions along a trajectory cheap.
    """
    g_start = G(start, w, x0) if g_start is None else g_start
    gap = target - g_start
    if gap <= 0.0:
        return start

    def resid(x):
        return G(x, w, start) - gap

    lo = start
    # first guess from the local slope 1/w(start)
    hi = start + max(gap * w(start), 1e-300) * 2.0
    with warnings.catch_warnings():
        # very wide brackets near an escape make quad complain about accuracy
        warnings.simplefilter("ignore", IntegrationWarning)
        while resid(hi) < 0.0:
            lo = hi
            hi = 2.0 * hi - start
            if hi > cap:
                raise RangeEscapeError("target lies beyond the range of G")
    return brentq(resid, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


def bihari_bound(c1: float, c2: float, h: SampledFunction, w="log_growth",
                 x0: float | None = None) -> SampledFunction:
    """``G^{-1}(G(c1) + c2 int_0^t h)`` at the knots of ``h``.

    ``w`` is ``"linear"``, ``"log_growth"`` (``y log(2+y)``) or any positive,
    continuous, non-decreasing callable.
    """
    if not c1 > 0:
        raise ValueError("c1 must be positive")
    if not c2 > 0:
        raise ValueError("c2 must be positive")
    if np.any(h.values < 0):
        raise ValueError("h must be non-negative")
    fn = NONLINEARITIES[w] if isinstance(w, str) else w
    if not callable(fn):
        raise TypeError("w must be a tag or a callable")
    x0 = min(c1, 1.0) / 2.0 if x0 is None else x0
    base = G(c1, fn, x0)
    hint = h.integral()
    out = np.empty_like(hint)
    prev, g_prev = c1, base
    for i, s in enumerate(hint):
        target = base + c2 * s
        try:
            prev = G_inverse(target, fn, x0, prev, g_prev)
        except RangeEscapeError:
            raise RangeEscapeError(f"bound escapes to infinity at t={h.t[i]:.6g}") from None
        out[i] = prev
        g_prev = target
    return SampledFunction(h.t, out, h.interp)


def rk4(f, y0: float, t: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Classical Runge–Kutta for ``y' = f(t, y)`` reported at ``t``."""
    y = np.empty(len(t))
    y[0] = y0
    for i in range(len(t) - 1):
        dt = (t[i + 1] - t[i]) / substeps
        s, v = t[i], y[i]
        for _ in range(substeps):
            k1 = f(s, v)
            k2 = f(s + dt / 2, v + dt / 2 * k1)
            k3 = f(s + dt / 2, v + dt / 2 * k2)
            k4 = f(s + dt, v + dt * k3)
            v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += dt
        y[i + 1] = v
    return y
