import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swirlreg.core import DriftProfile, Grid1D, InitialData1D, TimeGrid, field_from_function
from swirlreg.drift1d import (
    HalfLineProblem,
    check_comparison,
    discrete_residual,
    explicit_wholeline,
    solve_halfline,
    solve_robin,
)
from swirlreg.errors import GridMismatch, GridTooCoarse


def _gauss_odd(r):
    return r * np.exp(-r * r)


def _gauss_odd_exact(r, t):
    s = 1.0 + 4.0 * t
    return r * np.exp(-r * r / s) / s**1.5


def _zero_drift_run(h, dt, theta=1.0):
    grid = Grid1D.uniform(12.0, h)
    times = TimeGrid.uniform(0.5, int(round(0.5 / dt)))
    data = InitialData1D.tabulated(_gauss_odd)
    prob = HalfLineProblem(DriftProfile.zero(1.0), data, grid, times)
    return solve_halfline(prob, time_theta=theta)


@pytest.mark.parametrize("theta", [1.0, 0.5])
def test_zero_drift_matches_closed_form(theta):
    u = _zero_drift_run(1 / 64, 1 / 256, theta)
    exact = _gauss_odd_exact(u.grid.nodes, u.times.nodes[-1])
    assert np.max(np.abs(u.values[-1] - exact)) < 2e-3


def test_zero_drift_space_convergence():
    # Crank-Nicolson with a fine step isolates the second-order space error
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        u = _zero_drift_run(h, 1 / 1024, 0.5)
        errs.append(np.max(np.abs(u.values[-1] - _gauss_odd_exact(u.grid.nodes, 0.5))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


@pytest.mark.parametrize("scheme", ["upwind", "centered"])
@pytest.mark.parametrize("theta", [1.0, 0.5])
def test_linear_data_is_exact_without_drift(scheme, theta):
    grid = Grid1D.uniform(10.0, 1 / 32)
    times = TimeGrid.uniform(0.5, 32)
    prob = HalfLineProblem(DriftProfile.zero(1.0), InitialData1D.linear(2.0), grid, times)
    u = solve_halfline(prob, scheme=scheme, time_theta=theta)
    assert np.max(np.abs(u.values - 2.0 * grid.nodes[None, :])) < 1e-11


def test_shifted_linear_is_a_discrete_solution(type_i):
    # rho + A(t) satisfies the backward-Euler upwind equation exactly
    grid = Grid1D.uniform(10.0, 1 / 16)
    times = TimeGrid.graded(1.0, theta=1 / 16, dt_max=1 / 32)
    f = field_from_function(grid, times, lambda r, t: r + float(type_i.A(t)))
    res = discrete_residual(f.values, grid, times, type_i)
    assert np.max(np.abs(res)) < 1e-9 * max(1.0, float(type_i.A(times.t_end)))


def test_solution_below_shifted_linear(type_i):
    grid = Grid1D.uniform(10.0, 1 / 32)
    times = TimeGrid.graded(1.0, theta=1 / 16, dt_max=1 / 64)
    u = solve_halfline(HalfLineProblem(type_i, InitialData1D.linear(), grid, times))
    rep = check_comparison(u, lambda r, t: r + float(type_i.A(t)), tol=1e-10)
    assert rep.passed
    assert np.all(u.values >= -1e-14)


def test_far_policies(type_i):
    grid = Grid1D.uniform(10.0, 1 / 16)
    times = TimeGrid.uniform(0.5, 16)
    lin = solve_halfline(HalfLineProblem(type_i, InitialData1D.linear(), grid, times))
    assert lin.values[-1, -1] == pytest.approx(10.0 + float(type_i.A(0.5)))
    bump = solve_halfline(HalfLineProblem(type_i, InitialData1D.eta_bump(), grid, times, far="zero_neumann"))
    assert bump.values[-1, -1] == pytest.approx(bump.values[-1, -2], abs=1e-3)
    assert np.all(bump.values <= 1.0 + 1e-12)


def test_problem_validation(type_i):
    grid = Grid1D.uniform(10.0, 0.5)
    times = TimeGrid.uniform(0.5, 4)
    with pytest.raises(ValueError):
        HalfLineProblem(type_i, InitialData1D.linear(), grid, times, far="periodic")
    with pytest.raises(ValueError):
        HalfLineProblem(type_i, InitialData1D.tabulated(lambda r: r + 1.0), grid, times)
    with pytest.raises(ValueError):
        HalfLineProblem(type_i, InitialData1D.linear(), grid, TimeGrid.uniform(1.0, 4))
    prob = HalfLineProblem(type_i, InitialData1D.linear(), grid, times)
    with pytest.raises(ValueError):
        solve_halfline(prob, scheme="lax")


def test_centered_scheme_rejects_large_peclet():
    drift = DriftProfile.constant(50.0, 2.0)
    prob = HalfLineProblem(drift, InitialData1D.linear(), Grid1D.uniform(10.0, 0.25), TimeGrid.uniform(1.0, 8))
    with pytest.raises(GridTooCoarse):
        solve_halfline(prob, scheme="centered")
    solve_halfline(prob, scheme="upwind")


# whole-line oracle ----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.01, 0.99), st.floats(0.1, 3.0))
def test_wholeline_linear_data_is_shifted(r, t, K):
    drift = DriftProfile.type_i(K, 1.0)
    val = explicit_wholeline(InitialData1D.linear(), drift, r, t)
    assert val == pytest.approx(r + float(drift.A(t)), abs=1e-9)


@pytest.mark.parametrize("method", ["auto", "legendre"])
def test_wholeline_odd_gaussian(method):
    drift = DriftProfile.zero(1.0)
    for r, t in [(0.3, 0.1), (1.0, 0.5), (2.5, 0.9)]:
        val = explicit_wholeline(_gauss_odd, drift, r, t, method=method)
        assert val == pytest.approx(float(_gauss_odd_exact(r, t)), abs=1e-9)


def test_wholeline_rough_data_uses_breakpoints():
    # |y| on the whole line: E|r + 2 sqrt(t) Z| for a standard normal Z
    drift = DriftProfile.zero(1.0)
    r, t = 0.2, 0.25
    s = math.sqrt(2 * t)
    exact = r * math.erf(r / (2 * math.sqrt(t))) + 2 * s / math.sqrt(2 * math.pi) * math.exp(-r * r / (4 * t))
    val = explicit_wholeline(np.abs, drift, r, t, breakpoints=(0.0,), method="legendre")
    assert val == pytest.approx(exact, abs=1e-9)


def test_wholeline_time_zero_and_negative():
    drift = DriftProfile.zero(1.0)
    assert explicit_wholeline(np.abs, drift, -0.5, 0.0) == 0.5
    with pytest.raises(ValueError):
        explicit_wholeline(np.abs, drift, 0.0, -0.1)


# Robin route --------------------------------------------------------------------


def test_robin_zero_drift_is_insulated_constant():
    # g = 0 turns the Robin condition into v_r = 0, so v stays 1
    grid = Grid1D.uniform(10.0, 1 / 16)
    times = TimeGrid.uniform(0.5, 16)
    v, u = solve_robin(DriftProfile.zero(1.0), grid, times)
    assert np.allclose(v.values, 1.0, atol=1e-12)
    assert np.allclose(u.values[-1], grid.nodes, atol=1e-12)


def test_robin_agrees_with_dirichlet_route(type_i):
    grid = Grid1D.uniform(20.0, 1 / 64)
    times = TimeGrid.graded(1.0, theta=1 / 32, dt_max=1 / 256, t_end=0.9)
    _, u_robin = solve_robin(type_i, grid, times)
    u = solve_halfline(HalfLineProblem(type_i, InitialData1D.linear(), grid, times))
    mask = grid.nodes <= 5.0
    gap = np.max(np.abs(u_robin.values[-1, mask] - u.values[-1, mask]))
    assert gap < 0.02 * np.max(u.values[-1, mask])


def test_robin_rejects_negative_drift(type_i):
    with pytest.raises(ValueError):
        solve_robin(type_i.negated(), Grid1D.uniform(10.0, 0.5), TimeGrid.uniform(0.5, 4))


# comparison checker -----------------------------------------------------------


def test_comparison_witness_location():
    grid = Grid1D.uniform(10.0, 0.5)
    times = TimeGrid.uniform(1.0, 4)
    lo = field_from_function(grid, times, lambda r, t: np.where((r == 2.0) & (t == 0.5), 1.0, 0.0))
    rep = check_comparison(lo, lambda r, t: 0.0 * r)
    assert (rep.max_excess, rep.t, rep.rho) == (1.0, 0.5, 2.0)
    assert not rep.passed
    assert rep.to_dict()["pass"] is False


def test_comparison_needs_shared_grid():
    a = field_from_function(Grid1D.uniform(10.0, 0.5), TimeGrid.uniform(1.0, 4), lambda r, t: r)
    b = field_from_function(Grid1D.uniform(10.0, 0.25), TimeGrid.uniform(1.0, 4), lambda r, t: r)
    with pytest.raises(GridMismatch):
        check_comparison(a, b)
    with pytest.raises(TypeError):
        check_comparison(lambda r, t: r, lambda r, t: r)
