import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatns import mesh
from heatns.diagnostics import total_energy
from heatns.dynamics import PhysParams, check_invariants
from heatns.mesh import Grid, ScalarField
from heatns.scenarios import (ResolutionError, ScenarioSpec, build_scenario, check_vacuum_condition, get_spec,
                              min_cells_for, vacuum_density, vacuum_profile, stream_function_velocity,
                              vacuum_measure, vacuum_radius)

from conftest import random_stream


def test_vacuum_radius_identity():
    for c0 in (0.45, 0.5, 0.7, 0.9):
        assert math.pi * vacuum_radius(c0) ** 2 == pytest.approx(math.exp(-1 / c0 ** 2), rel=1e-14)


@pytest.mark.parametrize("k1,k2", [(1.0, 1.0), (0.5, 1.5), (1.9, 0.3)])
def test_profile_branch_values(k1, k2):
    c0 = 0.5
    eps = vacuum_radius(c0)
    assert vacuum_profile(eps / 4, c0, k1, k2) == 0.0
    assert vacuum_profile(eps / 2, c0, k1, k2) == 0.0
    assert vacuum_profile(eps, c0, k1, k2) == pytest.approx(c0, rel=1e-14)
    assert vacuum_profile(1.5 * eps, c0, k1, k2) == pytest.approx(1.0, rel=1e-14)
    assert vacuum_profile(0.9, c0, k1, k2) == 1.0


@pytest.mark.parametrize("k1,k2", [(1.0, 1.0), (1.5, 1.2)])
def test_profile_continuity_at_branch_points(k1, k2):
    c0 = 0.6
    eps = vacuum_radius(c0)
    for rb in (eps / 2, eps, 1.5 * eps):
        for delta in (1e-3 * eps, 1e-5 * eps):
            jump = abs(vacuum_profile(rb + delta, c0, k1, k2) - vacuum_profile(rb - delta, c0, k1, k2))
            assert jump <= 20 * delta / eps


def test_profile_monotone_in_radius():
    r = np.linspace(0, 1.5, 5001)
    for k1, k2 in ((1, 1), (0.3, 1.7)):
        assert np.all(np.diff(vacuum_profile(r, 0.5, k1, k2)) >= 0)


def test_spec_validation_messages():
    with pytest.raises(ValueError, match="k1 ∉ \\(0,2\\)"):
        ScenarioSpec(k1=3.0)
    with pytest.raises(ValueError, match="k2 ∉ \\(0,2\\)"):
        ScenarioSpec(k2=0.0)
    with pytest.raises(ValueError, match="c0"):
        ScenarioSpec(c0=1.0)
    with pytest.raises(ValueError):
        ScenarioSpec(theta_min=0.0)
    with pytest.raises(KeyError):
        get_spec("nope")
    assert get_spec("vacuum", nx=256).nx == 256


def test_under_resolved_core_is_rejected():
    spec = ScenarioSpec(nx=64, ny=64)
    with pytest.raises(ResolutionError, match=str(min_cells_for(0.5))):
        vacuum_density(spec, spec.grid)
    assert min_cells_for(0.5) <= 128
    vacuum_density(ScenarioSpec(), Grid(128, 128, 2, 2, -1, -1))
    with pytest.raises(ValueError):
        vacuum_density(ScenarioSpec(), Grid(128, 128, 1, 1, 0, 0))


def test_vacuum_measure_trivial_cases():
    g = Grid(10, 10)
    assert vacuum_measure(ScalarField.constant(g, 1.0), 0.5) == 0.0
    assert vacuum_measure(ScalarField.constant(g, 0.0), 0.3) == pytest.approx(1.0, rel=1e-14)


def test_vacuum_measure_of_vacuum_family():
    spec = ScenarioSpec(nx=256, ny=256)
    g = spec.grid
    V = vacuum_measure(vacuum_density(spec, g), 0.5)
    eps = vacuum_radius(0.5)
    assert abs(V - math.exp(-4.0)) <= 2 * g.h * 2 * math.pi * eps


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_vacuum_measure_monotone_in_c0(c0, dc):
    rng = np.random.default_rng(0)
    rho = ScalarField(Grid(16, 16), rng.random((16, 16)))
    assert vacuum_measure(rho, c0) <= vacuum_measure(rho, c0 + dc)


def test_condition_examples():
    ok, margin = check_vacuum_condition(math.exp(-4.0), 0.5)
    assert ok and margin == 0.0
    ok, margin = check_vacuum_condition(0.3, 1.0)
    assert ok and margin == pytest.approx(math.exp(-1) - 0.3)
    ok, _ = check_vacuum_condition(math.exp(-4.0) + 1e-6, 0.5)
    assert not ok


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.05, 0.9), st.floats(0.001, 0.09))
def test_condition_monotone_in_c0(V, c0, dc):
    ok_lo, m_lo = check_vacuum_condition(V, c0)
    ok_hi, m_hi = check_vacuum_condition(V, c0 + dc)
    assert m_hi >= m_lo
    assert ok_hi or not ok_lo


def test_stream_velocity(rng):
    g = Grid(9, 12)
    assert stream_function_velocity(ScalarField(g, np.zeros((10, 13)), location="node")).max_abs() == 0
    v = stream_function_velocity(ScalarField(g, random_stream(g, rng), location="node"))
    assert np.abs(mesh.divergence(v).values).max() <= 1e-13 * max(1, v.max_abs())
    bad = random_stream(g, rng)
    bad[0, 3] = 1e-3
    with pytest.raises(ValueError):
        stream_function_velocity(ScalarField(g, bad, location="node"))


def test_stream_velocity_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid(n, n)
        x, y = g.nodes()
        psi = np.sin(np.pi * x) * np.sin(np.pi * y)
        psi[0] = psi[-1] = 0
        psi[:, 0] = psi[:, -1] = 0
        v = stream_function_velocity(ScalarField(g, psi, location="node"))
        xu, yu = g.u_faces()
        errs.append(np.abs(v.u - np.pi * np.sin(np.pi * xu) * np.cos(np.pi * yu)).max())
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_rest_scenario():
    s = build_scenario(get_spec("rest"))
    assert s.u.max_abs() == 0.0
    assert np.all(s.theta.values == 1.0) and np.all(s.rho.values == 1.0)


@pytest.mark.parametrize("name", ["vacuum", "uniform", "rest"])
def test_built_states_are_valid(name):
    spec = get_spec(name)
    s = build_scenario(spec)
    check_invariants(s, PhysParams())
    assert s.u.is_no_slip()
    assert s.rho.values.max() == pytest.approx(spec.rho_value if spec.density == "uniform" else 1.0)
    assert s.theta.values.min() >= spec.theta_min
    assert s.theta.values.max() <= spec.theta_min + spec.theta_amp
    if spec.amplitude > 0:
        assert s.u.max_abs() == pytest.approx(spec.amplitude, rel=1e-12)


def test_initial_energy_brute_force():
    spec = get_spec("vacuum", nx=128, ny=128, amplitude=0.7)
    s = build_scenario(spec)
    g = s.grid
    r, th, u, v = s.rho.values, s.theta.values, s.u.u, s.u.v
    e = 0.0
    for i in range(g.nx):
        for j in range(g.ny):
            e += r[i, j] * th[i, j] * g.hx * g.hy
    for i in range(1, g.nx):
        for j in range(g.ny):
            e += 0.5 * 0.5 * (r[i - 1, j] + r[i, j]) * u[i, j] ** 2 * g.hx * g.hy
    for i in range(g.nx):
        for j in range(1, g.ny):
            e += 0.5 * 0.5 * (r[i, j - 1] + r[i, j]) * v[i, j] ** 2 * g.hx * g.hy
    assert total_energy(s) == pytest.approx(e, rel=1e-13)
