import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swirlreg.core import DriftProfile, Grid1D, InitialData1D, TimeGrid, field_from_function
from swirlreg.drift1d import HalfLineProblem, solve_halfline
from swirlreg.errors import BoundaryLeavesDomain, GridMismatch, InsufficientSamples, WindowExceeded
from swirlreg.moving_frame import (
    DECREASING,
    INCREASING,
    MovingDomain,
    ParabolicCube,
    compare_with_halfline,
    exterior_fraction_reference,
    exterior_measure_fraction,
    from_moving_frame,
    holder_seminorms,
    pull_back,
    solve_moving_domain,
    to_moving_frame,
    verify_proposition_holder,
)

# increasing-boundary fractions for TypeI(1, 1), from adaptive quadrature of the
# cut width in high precision (mpmath) and double precision (scipy), agreeing to 1e-11
FROZEN_INCREASING = {
    (0.5, 0.05): 0.48233703430911,
    (0.9, 0.0125): 0.49012045427332,
    (0.9999, 0.05): 0.09166666666667,
    (0.9999, 0.0125): 0.24118350008150,
}


def test_frame_round_trip(coarse_u, type_i):
    nu = to_moving_frame(coarse_u, type_i)
    assert np.allclose(nu.shift, type_i.A(coarse_u.times.nodes))
    back = from_moving_frame(nu)
    assert back.shift is None and back.provenance == coarse_u.provenance
    assert np.array_equal(back.values, coarse_u.values)
    with pytest.raises(GridMismatch):
        to_moving_frame(nu, type_i)
    with pytest.raises(GridMismatch):
        from_moving_frame(coarse_u)
    with pytest.raises(GridMismatch):
        to_moving_frame(coarse_u, DriftProfile.type_i(2.0, 1.0))


def test_pull_back_recovers_nodes(coarse_u, type_i):
    nu = to_moving_frame(coarse_u, type_i)
    rho = coarse_u.grid.nodes[:200]
    assert np.allclose(pull_back(nu, type_i, rho), coarse_u.values[:, :200], atol=1e-12)


# moving-boundary heat solver ------------------------------------------------------


def test_fixed_boundary_matches_closed_form():
    drift = DriftProfile.zero(1.0)
    times = TimeGrid.uniform(0.5, 256)
    data = InitialData1D.tabulated(lambda r: r * np.exp(-r * r))
    nu = solve_moving_domain(MovingDomain(drift, z_max=12.0), data, spacing=1 / 64, times=times)
    z = nu.positions(-1)
    s = 1.0 + 4.0 * 0.5
    exact = z * np.exp(-z * z / s) / s**1.5
    assert np.max(np.abs(nu.values[-1] - exact)) < 2e-3


def test_moving_solution_matches_halfline(type_i):
    times = TimeGrid.graded(1.0, theta=1 / 32, dt_max=1 / 256, t_end=0.9)
    grid = Grid1D.uniform(20.0, 1 / 128)
    u = solve_halfline(HalfLineProblem(type_i, InitialData1D.linear(), grid, times))
    nu = solve_moving_domain(MovingDomain(type_i, z_max=20.0 + 2.0), InitialData1D.linear(), 1 / 128, times)
    rel, _, _ = compare_with_halfline(u, nu, type_i)
    assert rel < 1e-3
    # the moving solution stays between 0 and the linear comparison function z
    z = nu.positions(0)
    assert np.all(nu.values >= -1e-14)
    assert np.all(nu.values <= z[None, :] + 1e-12)


def test_moving_domain_errors(type_i):
    times = TimeGrid.uniform(0.5, 4, horizon=1.0)
    with pytest.raises(BoundaryLeavesDomain):
        solve_moving_domain(MovingDomain(type_i, z_max=0.5), InitialData1D.linear(), 1 / 16, times)
    with pytest.raises(ValueError):
        solve_moving_domain(MovingDomain(type_i), InitialData1D.linear(), 1 / 16)
    with pytest.raises(ValueError):
        MovingDomain(type_i, orientation="sideways")


# exterior measure -------------------------------------------------------------------


def test_cube_basics():
    q = ParabolicCube(1.0, 0.5, 0.1)
    assert q.volume == pytest.approx(0.002)
    assert q.contains(1.05, 0.495) and not q.contains(1.05, 0.5) and not q.contains(1.2, 0.495)
    with pytest.raises(ValueError):
        ParabolicCube(0.0, 0.5, 0.0)


@pytest.mark.parametrize(("t", "r"), list(FROZEN_INCREASING))
def test_exterior_fraction_frozen(type_i, t, r):
    inc = MovingDomain(type_i, INCREASING)
    dec = MovingDomain(type_i, DECREASING)
    ref = FROZEN_INCREASING[(t, r)]
    assert exterior_fraction_reference(inc, t, r) == pytest.approx(ref, abs=1e-11)
    assert exterior_measure_fraction(inc, t, r) == pytest.approx(ref, abs=2e-5)
    assert exterior_fraction_reference(dec, t, r) == pytest.approx(1.0 - ref, abs=1e-11)


def test_midpoint_error_estimate(type_i):
    f, err = exterior_measure_fraction(MovingDomain(type_i), 0.9999, 0.05, resolution=256, return_error=True)
    assert abs(f - FROZEN_INCREASING[(0.9999, 0.05)]) <= 4 * err + 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.9999), st.floats(0.005, 0.2), st.floats(0.2, 3.0))
def test_decreasing_boundary_leaves_half_cube(t, r, K):
    # the exterior contains the whole left half of the cube
    drift = DriftProfile.type_i(K, 1.0)
    r = min(r, 0.99 * np.sqrt(t))
    assert exterior_measure_fraction(MovingDomain(drift, DECREASING), t, r, resolution=64) >= 0.5


def test_exterior_window_errors(type_i):
    with pytest.raises(WindowExceeded):
        exterior_measure_fraction(MovingDomain(type_i), 0.01, 0.2)
    with pytest.raises(WindowExceeded):
        exterior_fraction_reference(MovingDomain(type_i), 1.0, 0.01)


# Hölder seminorms and the interior estimate ---------------------------------------------


def test_seminorms_match_brute_force(rng):
    x = np.sort(rng.uniform(0, 1, 25))
    v = rng.normal(size=25)
    alphas = np.array([0.2, 0.5, 0.9])
    got = holder_seminorms(x, v, alphas, 0.05, 0.6)
    for a, g in zip(alphas, got):
        best = 0.0
        for i in range(x.size):
            for j in range(x.size):
                d = abs(x[i] - x[j])
                if 0.05 <= d <= 0.6:
                    best = max(best, abs(v[i] - v[j]) / d**a)
        assert g == pytest.approx(best, rel=1e-12)
    with pytest.raises(InsufficientSamples):
        holder_seminorms(x, v, alphas, 2.0, 3.0)


def test_square_root_seminorm_is_one():
    x = np.linspace(0, 1, 201)
    semi = holder_seminorms(x, np.sqrt(x), np.array([0.5]), 0.01, 1.0)
    assert semi[0] == pytest.approx(1.0, abs=1e-12)


def test_proposition_on_heat_solution():
    grid = Grid1D.uniform(10.0, 1 / 64)
    times = TimeGrid.uniform(0.5, 64)
    u = field_from_function(grid, times, lambda r, t: np.sin(r) * np.exp(-t))
    rep = verify_proposition_holder(u, delta=0.25, rho0=1.0)
    assert rep.passed
    assert 0 < rep.alpha <= 0.99 and 0 < rep.C < 10
    with pytest.raises(InsufficientSamples):
        verify_proposition_holder(u, delta=0.25, rho0=0.01)
    with pytest.raises(InsufficientSamples):
        verify_proposition_holder(u, delta=1.0, rho0=1.0)
