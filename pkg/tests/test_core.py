import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from swirlreg.core import (
    LN10,
    DriftProfile,
    Grid1D,
    InitialData1D,
    SpaceTimeField1D,
    TimeGrid,
    cosine_ramp,
    drift_eval,
    field_from_function,
    make_lambda_zero,
    parse_config,
)
from swirlreg.errors import GridMismatch, HorizonExceeded, NonFiniteValue

DRIFTS = [
    DriftProfile.type_i(1.0, 1.0),
    DriftProfile.type_i(0.5, 2.0),
    DriftProfile.log_supercritical(),
    DriftProfile.constant(0.7, 3.0),
    DriftProfile.zero(1.0),
]


@pytest.mark.parametrize("drift", DRIFTS, ids=lambda d: d.kind)
@pytest.mark.parametrize("t", [0.0, 0.3, 0.9, 0.999])
def test_primitive_matches_quadrature(drift, t):
    ref, _ = quad(lambda s: float(drift.g(s)), 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)
    assert float(drift.A(t)) == pytest.approx(ref, abs=1e-10)


def test_type_i_closed_forms():
    d = DriftProfile.type_i(1.0, 1.0)
    assert float(d.g(0.0)) == 1.0
    assert float(d.A(0.75)) == pytest.approx(1.0)
    assert drift_eval(d, 0.75) == (pytest.approx(2.0), pytest.approx(1.0))


def test_log_supercritical_closed_form():
    d = DriftProfile.log_supercritical()
    assert float(d.g(0.0)) == pytest.approx(LN10)
    assert float(d.g(0.99)) == pytest.approx(math.log(1000.0) / 0.1)


@pytest.mark.parametrize("drift", DRIFTS[:3], ids=lambda d: d.kind)
def test_horizon_exceeded(drift):
    with pytest.raises(HorizonExceeded):
        drift.g(drift.horizon)
    with pytest.raises(HorizonExceeded):
        drift.A(drift.horizon + 1.0)


def test_negated_and_config():
    d = DriftProfile.type_i(2.0, 1.0)
    n = d.negated()
    assert float(n.g(0.5)) == -float(d.g(0.5))
    assert float(n.A(0.5)) == -float(d.A(0.5))
    assert n.to_config() == {"kind": "type_i", "K": 2.0, "T": 1.0, "scale": -1.0}


def test_tabulated_drift_trapezoid():
    t = np.linspace(0, 1, 11)
    d = DriftProfile.tabulated(t, 2 * t)
    # exact for linear g
    assert float(d.A(0.55)) == pytest.approx(0.55**2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.99), st.floats(1e-6, 0.009), st.floats(0.1, 3.0))
def test_mean_on_is_bracketed(t0, dt, K):
    d = DriftProfile.type_i(K, 1.0)
    m = d.mean_on(t0, t0 + dt)
    assert float(d.g(t0)) * (1 - 1e-12) <= m <= float(d.g(t0 + dt)) * (1 + 1e-12)


# grids -----------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(np.array([0.0, 1.0, 2.0]))  # L < 10
    with pytest.raises(ValueError):
        Grid1D(np.array([0.0, 5.0, 5.0, 12.0]))
    with pytest.raises(ValueError):
        Grid1D(np.array([0.1, 5.0, 12.0]))


@pytest.mark.parametrize("h", [1 / 16, 1 / 64])
def test_cell_centered_grid(h):
    g = Grid1D.cell_centered_grid(12.0, h)
    x = g.nodes
    assert x[0] == 0 and x[1] == pytest.approx(h / 2)
    assert np.allclose(np.diff(x[1:]), h)
    assert g.cell_centered


def test_graded_space_grid():
    g = Grid1D.graded(10.0, h_min=1e-3, h_max=0.05)
    dx = np.diff(g.nodes)
    assert dx[0] == pytest.approx(1e-3)
    assert dx.max() <= 0.05 + 1e-12
    assert g.L == 10.0


@settings(max_examples=30, deadline=None)
@given(st.floats(1 / 256, 1 / 8), st.floats(1 / 1024, 1 / 16))
def test_graded_time_grid_rule(theta, dt_max):
    tg = TimeGrid.graded(1.0, theta=theta, dt_max=dt_max)
    t = tg.nodes
    dt = np.diff(t)
    assert t[-1] == pytest.approx(1.0 - 1e-4)
    assert np.all(dt <= dt_max * (1 + 1e-12))
    assert np.all(dt[:-1] <= theta * (1.0 - t[:-2]) * (1 + 1e-9))


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.4]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 1.0]), horizon=1.0, tau_min=1e-4)
    tg = TimeGrid.uniform(1.0, 4)
    assert tg.index_of(0.26) == 1


# initial data ------------------------------------------------------------------


def test_initial_kinds():
    r = np.array([0.0, 0.25, 2.0, 20.0])
    assert np.allclose(InitialData1D.linear(2.0)(r), 2 * r)
    assert np.allclose(InitialData1D.two_alpha_linear(1.5)(r), 3 * r)
    eta = InitialData1D.eta_bump()
    assert float(eta(0.0)) == 0.0
    assert float(eta(LN10)) == 1.0
    assert float(eta(0.5 * LN10)) == pytest.approx(0.5)
    assert InitialData1D.eta_bump().far_slope == 0.0


def test_lambda_zero_profile():
    lam = make_lambda_zero(2.0)
    r = np.array([0.25, 0.5, 1.0, 3.0])
    assert np.allclose(lam(r), [2 * 0.0625, 2 * 0.25, 2.0, 6.0])
    # C^1 joins at 1/2 and 1
    for r0 in (0.5, 1.0):
        e = 1e-7
        assert float(lam(r0 + e)) == pytest.approx(float(lam(r0 - e)), abs=1e-6)
        assert float(lam.derivative(r0 + e)) == pytest.approx(float(lam.derivative(r0 - e)), abs=1e-5)
    # bounded by alpha0 r and above alpha0 min(r^2, r)
    x = np.linspace(0, 3, 601)
    assert np.all(lam(x) <= 2 * x + 1e-14)
    assert np.all(lam(x) >= 2 * np.minimum(x * x, x) - 1e-14)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["linear", "two_alpha_linear", "lambda_zero", "eta_bump"]), st.floats(0.01, 5.0))
def test_initial_derivative_matches_difference(kind, r):
    data = make_lambda_zero(1.3) if kind == "lambda_zero" else getattr(InitialData1D, kind)()
    e = 1e-6
    fd = (float(data(r + e)) - float(data(r - e))) / (2 * e)
    assert float(data.derivative(r)) == pytest.approx(fd, abs=1e-5)


def test_cosine_ramp_limits():
    assert np.allclose(cosine_ramp([-1.0, 0.0, 0.5, 1.0, 2.0]), [1, 1, 0.5, 0, 0])


# fields ----------------------------------------------------------------------


def _field():
    grid = Grid1D.uniform(10.0, 1.0)
    times = TimeGrid.uniform(1.0, 4)
    return field_from_function(grid, times, lambda r, t: r * (1 + t) + 1 / 3, "test")


def test_field_csv_round_trip():
    f = _field()
    text = f.to_csv()
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    assert len(rows) == f.times.size * f.grid.size
    vals = np.array([float(r[2]) for r in rows]).reshape(f.values.shape)
    assert np.array_equal(vals, f.values)


def test_field_binary_round_trip(tmp_path):
    f = _field()
    digest = f.to_binary(tmp_path / "f.npz")
    g = SpaceTimeField1D.from_binary(tmp_path / "f.npz")
    assert g.checksum() == digest
    assert np.array_equal(g.values, f.values)


def test_field_validation():
    f = _field()
    with pytest.raises(GridMismatch):
        SpaceTimeField1D(f.grid, f.times, f.values[:, :-1])
    bad = np.array(f.values)
    bad[1, 1] = np.nan
    with pytest.raises(NonFiniteValue):
        SpaceTimeField1D(f.grid, f.times, bad)


def test_thinned_keeps_endpoints():
    grid = Grid1D.uniform(10.0, 0.01)
    times = TimeGrid.uniform(1.0, 500)
    f = field_from_function(grid, times, lambda r, t: r + t)
    th = f.thinned(max_times=20, max_nodes=50)
    assert th.times.size <= 21 and th.grid.size <= 51
    assert th.times.nodes[-1] == 1.0 and th.grid.L == 10.0
    assert np.allclose(th.values, th.grid.nodes[None, :] + th.times.nodes[:, None])


def test_truncated():
    f = _field().truncated(0.5)
    assert f.times.t_end == 0.5


def test_parse_config():
    text = "# comment\nK = 1.5\n  T=2   # trailing\n\nName = run one\n"
    assert parse_config(text) == {"k": "1.5", "t": "2", "name": "run one"}
    with pytest.raises(ValueError):
        parse_config("K 1")
