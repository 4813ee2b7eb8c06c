import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swirlreg.core import DriftProfile, Grid1D, InitialData1D, TimeGrid, make_lambda_zero
from swirlreg.drift1d import HalfLineProblem, solve_halfline
from swirlreg.errors import GridMismatch, LowerBoundViolated, PropertyFailed
from swirlreg.gamma2d import (
    AxiField2D,
    GammaProblem,
    StripGrid,
    _cyclic_solve,
    default_gamma0,
    gamma_slice_as_field,
    make_velocity,
    odd_bump,
    solve_gamma,
    sup_bound_report,
    swirl_bound_report,
    verify_chain,
)
from swirlreg.lambda_modulus import LambdaProblem, solve_lambda

SMALL = StripGrid.default(L=10.0, dr=1 / 16, n3=32)


def _times(t_end=0.5, dt=1 / 64):
    return TimeGrid.graded(1.0, theta=1 / 16, dt_max=dt, t_end=t_end)


@pytest.mark.parametrize("family,params", [("swirl_cell", {}), ("swirl_cell", {"parity": "even"}), ("stationary", {})]
                         + [("random", {"seed": s}) for s in range(5)])
def test_velocity_is_divergence_free_and_certified(family, params):
    v = make_velocity(family, params, grid=SMALL, times=_times())
    assert v.divergence_residual(SMALL, 3.0) < 1e-10
    assert v.report["pass"] and v.report["min_vr_plus_g"] >= -1e-8


def test_velocity_bound_is_enforced():
    with pytest.raises(LowerBoundViolated) as info:
        make_velocity("swirl_cell", {"amplitude": 3.0}, grid=SMALL, times=_times())
    assert info.value.witness["margin"] < 0
    v = make_velocity("swirl_cell", {"amplitude": 3.0}, certify=False)
    assert not v.report
    with pytest.raises(ValueError):
        make_velocity("vortex")


def test_zero_velocity_components():
    v = make_velocity("zero", grid=SMALL, times=_times())
    vr, v3 = v.components(SMALL, 5.0)
    assert not np.any(vr) and not np.any(v3)


def test_strip_grid_geometry():
    assert np.allclose(SMALL.x3, -SMALL.x3[::-1])
    assert SMALL.r_faces[0] == 0.0 and SMALL.r_faces.size == SMALL.r_cells.size + 1
    with pytest.raises(GridMismatch):
        StripGrid(Grid1D.uniform(10.0, 0.25))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_cyclic_solve_matches_dense(m, ns, seed):
    rng = np.random.default_rng(seed)
    lo = -rng.uniform(0, 1, (ns, m))
    up = -rng.uniform(0, 1, (ns, m))
    dg = 1.0 + rng.uniform(0, 1, (ns, m)) - lo - up
    rhs = rng.normal(size=(ns, m))
    got = _cyclic_solve(lo, dg, up, rhs)
    for s in range(ns):
        A = np.diag(dg[s])
        for i in range(m):
            A[i, (i - 1) % m] += lo[s, i]
            A[i, (i + 1) % m] += up[s, i]
        assert np.allclose(got[s], np.linalg.solve(A, rhs[s]), atol=1e-12)


def test_problem_validation():
    times = _times()
    v = make_velocity("zero", grid=SMALL, times=times)
    with pytest.raises(ValueError):
        GammaProblem(v, lambda r, z: 1.0 + 0 * r * z, 1.0, SMALL, times)
    with pytest.raises(ValueError):
        GammaProblem(v, lambda r, z: 2.0 * r + 0 * z, 1.0, SMALL, times)


# solver properties -------------------------------------------------------------------


def test_zero_velocity_with_x3_constant_data_is_lambda():
    drift = DriftProfile.zero(1.0)
    times = _times()
    lam0 = make_lambda_zero(1.5)
    v = make_velocity("zero", drift=drift, grid=SMALL, times=times)
    gamma = solve_gamma(GammaProblem(v, lambda r, z: lam0(r) + 0 * z, 1.5, SMALL, times))
    lam = solve_lambda(LambdaProblem(drift, 1.5, SMALL.r, times))
    assert np.max(np.abs(gamma.envelope - lam.values)) < 1e-12
    spread = gamma.values.max(axis=2) - gamma.values.min(axis=2)
    assert spread.max() < 1e-12


def test_odd_data_stays_odd():
    times = _times()
    v = make_velocity("swirl_cell", grid=SMALL, times=times)
    gamma = solve_gamma(GammaProblem(v, default_gamma0(1.0, odd_bump), 1.0, SMALL, times))
    last = gamma.values[-1]
    assert np.max(np.abs(last + last[:, ::-1])) < 1e-12 * max(1.0, np.abs(last).max())
    assert np.abs(last).max() > 0.1


def test_translation_by_whole_cells():
    times = _times(0.25)
    m = 5
    s = m * SMALL.dx3
    runs = []
    for shift in (0.0, s):
        v = make_velocity("random", {"seed": 3, "shift": shift}, grid=SMALL, times=times)
        runs.append(solve_gamma(GammaProblem(v, default_gamma0(1.0, shift=shift), 1.0, SMALL, times)).values)
    assert np.max(np.abs(np.roll(runs[0], m, axis=2) - runs[1])) < 1e-12


def test_chain_sup_and_swirl_bounds(type_i):
    times = _times(0.9, 1 / 64)
    alpha0 = 1.0
    v = make_velocity("swirl_cell", grid=SMALL, times=times)
    gamma = solve_gamma(GammaProblem(v, default_gamma0(alpha0), alpha0, SMALL, times), store_every=8)
    lam = solve_lambda(LambdaProblem(type_i, alpha0, SMALL.r, times))
    u = solve_halfline(HalfLineProblem(type_i, InitialData1D.two_alpha_linear(alpha0), SMALL.r, times))
    chain = verify_chain(gamma, lam, u)
    assert chain["pass"], chain
    assert sup_bound_report(gamma)["pass"]
    rep = swirl_bound_report(gamma, alpha=0.3, C0=10.0, alpha0=alpha0, delta=0.1)
    assert rep["pass"] and rep["max_swirl"] <= rep["swirl_bound_at_r1"] * SMALL.r.nodes[1] ** (0.3 - 1)
    with pytest.raises(GridMismatch):
        verify_chain(gamma, lam.truncated(0.5), u)


def test_swirl_bound_failure_raises():
    times = _times(0.25)
    v = make_velocity("zero", grid=SMALL, times=times)
    gamma = solve_gamma(GammaProblem(v, default_gamma0(1.0), 1.0, SMALL, times))
    rep = swirl_bound_report(gamma, alpha=0.5, C0=1e-3, alpha0=1.0, delta=0.0)
    assert not rep["pass"] and rep["witness"]["gamma"] > rep["witness"]["bound"]
    with pytest.raises(PropertyFailed):
        swirl_bound_report(gamma, alpha=0.5, C0=1e-3, alpha0=1.0, delta=0.0, raise_on_fail=True)


# output --------------------------------------------------------------------------------


def test_csv_binary_and_slice(tmp_path):
    times = _times(0.125)
    v = make_velocity("zero", grid=SMALL, times=times)
    gamma = solve_gamma(GammaProblem(v, default_gamma0(1.0), 1.0, SMALL, times), store_every=4)
    lines = gamma.to_csv(tmp_path / "g.csv").strip().splitlines()
    assert lines[0] == "t,r,x3,value"
    assert len(lines) - 1 == gamma.stored.size * SMALL.r.size * SMALL.n3
    gamma.to_binary(tmp_path / "g.npz")
    with np.load(tmp_path / "g.npz") as data:
        assert np.array_equal(data["values"], gamma.values)
    col = gamma_slice_as_field(gamma, SMALL.n3 // 2)
    assert col.values.shape == (gamma.stored.size, SMALL.r.size)
    with pytest.raises(GridMismatch):
        AxiField2D(SMALL, times, gamma.values, gamma.stored, gamma.envelope[:-1])
