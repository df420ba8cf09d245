import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatns.inequalities import (G, G_inverse, NONLINEARITIES, RangeEscapeError, SampledFunction, bihari_bound,
                                 gronwall_envelope, rk4)

T = np.linspace(0.0, 1.0, 1001)
ONE = SampledFunction(T, np.ones_like(T))


def test_sampled_function_contract():
    with pytest.raises(ValueError):
        SampledFunction([0, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        SampledFunction([0, 1], [1, np.nan])
    with pytest.raises(ValueError):
        SampledFunction([0, 1], [1, 2], interp="cubic")
    f = SampledFunction([0, 1, 2], [1, 3, 5], interp="piecewise-constant")
    assert f(1.5) == 3 and f(0.99) == 1
    assert np.allclose(f.integral(), [0, 1, 4])
    assert np.allclose(SampledFunction([0, 1, 2], [1, 3, 5]).integral(), [0, 2, 6])


def test_gronwall_exponential():
    env = gronwall_envelope(ONE, ONE)
    assert np.max(np.abs(env.values / np.exp(T) - 1)) <= 1e-8


def test_gronwall_zero_rate():
    f2 = SampledFunction(T, 1 + T ** 2)
    env = gronwall_envelope(f2, SampledFunction(T, np.zeros_like(T)))
    assert np.array_equal(env.values, f2.values)


def test_gronwall_matches_ode_oracle():
    rng = np.random.default_rng(11)
    a = rng.random(4)
    c = lambda t: a[0] + a[1] * np.sin(3 * t) ** 2 + a[2] * t + a[3] * np.cos(t) ** 2
    env = gronwall_envelope(SampledFunction(T, np.full_like(T, 2.0)), SampledFunction.from_callable(c, T))
    ode = rk4(lambda t, y: c(t) * y, 2.0, T, substeps=4)
    assert np.max(np.abs(env.values / ode - 1)) <= 1e-6


def test_gronwall_resamples_c_on_other_knots():
    c = SampledFunction(np.linspace(0, 1, 7), np.full(7, 1.0))
    env = gronwall_envelope(ONE, c)
    assert np.max(np.abs(env.values / np.exp(T) - 1)) <= 1e-12


def test_gronwall_reports_first_violation():
    vals = np.ones_like(T)
    vals[400:] = 0.5
    with pytest.raises(ValueError, match="knot 400"):
        gronwall_envelope(SampledFunction(T, vals), ONE)
    with pytest.raises(ValueError, match="non-negative"):
        gronwall_envelope(ONE, SampledFunction(T, -np.ones_like(T)))


def test_bihari_linear_is_gronwall():
    b = bihari_bound(1.0, 1.0, ONE, "linear")
    env = gronwall_envelope(ONE, ONE)
    assert np.max(np.abs(b.values / env.values - 1)) <= 1e-8


def test_bihari_zero_forcing():
    b = bihari_bound(0.37, 2.0, SampledFunction(T, np.zeros_like(T)))
    assert np.allclose(b.values, 0.37, rtol=1e-12)


def test_bihari_log_growth_matches_rk4():
    b = bihari_bound(1.0, 1.0, ONE, "log_growth")
    w = NONLINEARITIES["log_growth"]
    ode = rk4(lambda t, y: w(y), 1.0, T, substeps=4)
    assert np.max(np.abs(b.values / ode - 1)) <= 1e-4


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 3.0), st.integers(0, 2 ** 31))
def test_bihari_equals_ode_for_random_forcing(c1, c2, seed):
    a = np.random.default_rng(seed).random(3)
    h = lambda t: a[0] + a[1] * t + a[2] * np.sin(5 * t) ** 2
    t = np.linspace(0, 1, 2001)
    b = bihari_bound(c1, c2, SampledFunction.from_callable(h, t))
    w = NONLINEARITIES["log_growth"]
    ode = rk4(lambda s, y: c2 * h(s) * w(y), c1, t, substeps=4)
    # the trapezoid integral of h carries O(dt^2) error, amplified by the growth
    assert np.max(np.abs(b.values / ode - 1)) <= 1e-4


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5))
def test_bihari_monotone(c1, c2, dc, dh):
    t = np.linspace(0, 1, 51)
    h = SampledFunction(t, 1 + np.sin(4 * t) ** 2)
    base = bihari_bound(c1, c2, h).values
    tol = 1e-12 * base
    assert np.all(bihari_bound(c1 + dc, c2, h).values >= base - tol)
    assert np.all(bihari_bound(c1, c2 + dc, h).values >= base - tol)
    assert np.all(bihari_bound(c1, c2, SampledFunction(t, h.values + dh * t)).values >= base - tol)


def test_G_inverse_identity():
    w = NONLINEARITIES["log_growth"]
    for x in (0.01, 0.3, 1.0, 7.5, 1e3, 1e6):
        assert G_inverse(G(x, w, 0.5), w, 0.5, 0.005) == pytest.approx(x, rel=1e-10)
    for target in (-2.0, 0.0, 0.7, 3.0):
        assert G(G_inverse(target, w, 0.5, 1e-6), w, 0.5) == pytest.approx(target, abs=1e-10)


def test_x0_independence():
    t = np.linspace(0, 1, 101)
    h = SampledFunction(t, 1 + t)
    ref = bihari_bound(2.0, 1.5, h).values
    for x0 in (0.01, 0.3, 5.0):
        assert np.max(np.abs(bihari_bound(2.0, 1.5, h, x0=x0).values / ref - 1)) <= 1e-10


def test_range_escape():
    # y' = y^2, y(0) = 1 blows up at t = 1
    t = np.linspace(0, 2, 21)
    with pytest.raises(RangeEscapeError, match="escapes to infinity at t="):
        bihari_bound(1.0, 1.0, SampledFunction(t, np.ones_like(t)), w=lambda y: y * y)
    b = bihari_bound(1.0, 1.0, SampledFunction(t[:9], np.ones(9)), w=lambda y: y * y)
    assert np.allclose(b.values, 1 / (1 - t[:9]), rtol=1e-10)


def test_bihari_domain_errors():
    with pytest.raises(ValueError, match="c1"):
        bihari_bound(0.0, 1.0, ONE)
    with pytest.raises(ValueError, match="c2"):
        bihari_bound(1.0, -1.0, ONE)
    with pytest.raises(ValueError, match="h"):
        bihari_bound(1.0, 1.0, SampledFunction(T, -np.ones_like(T)))
    with pytest.raises(KeyError):
        bihari_bound(1.0, 1.0, ONE, w="cubic")


def test_rk4_order():
    errs = []
    for n in (11, 21):
        t = np.linspace(0, 1, n)
        errs.append(abs(rk4(lambda s, y: y, 1.0, t)[-1] - math.e))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
