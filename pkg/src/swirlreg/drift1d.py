"""Half-line drift-diffusion  u_t = u_rr + g(t) u_r  and its companions.

The direct solver is backward Euler (Crank-Nicolson on request) with
second-order diffusion and first-order upwind drift, so every step is an
M-matrix solve and the discrete maximum principle holds.  Each step uses the
interval-averaged drift (A(t1) - A(t0)) / dt, which keeps rho + A(t) an exact
discrete solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded
from scipy.special import erfc

from .core import DriftProfile, Grid1D, InitialData1D, SpaceTimeField1D, TimeGrid
from .errors import GridMismatch, GridTooCoarse, NonFiniteValue, QuadratureNotConverged

FAR_POLICIES = ("linear_comparison", "zero_neumann")


@dataclass(frozen=True)
class HalfLineProblem:
    drift: DriftProfile
    initial: InitialData1D
    grid: Grid1D
    times: TimeGrid
    far: str = "linear_comparison"
    forcing: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.far not in FAR_POLICIES:
            raise ValueError(f"far boundary policy must be one of {FAR_POLICIES}")
        if abs(float(self.initial(0.0))) > 1e-12:
            raise ValueError("initial data must vanish at rho = 0")
        if self.times.t_end >= self.drift.horizon:
            raise ValueError("time grid reaches the drift horizon")

    def far_value(self, t: float) -> float:
        return self.initial.far_slope * (self.grid.L + float(self.drift.A(t)))


def _d2_coefficients(x):
    """Three-point second-derivative weights at interior nodes of a (possibly nonuniform) grid."""
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    a = 2.0 / (hm * (hm + hp))
    c = 2.0 / (hp * (hm + hp))
    return a, -(a + c), c, hm, hp


def _drift_coefficients(g, hm, hp, scheme):
    if scheme == "upwind":
        if g >= 0:
            return np.zeros_like(hm), -g / hp, g / hp
        return -g / hm, g / hm, np.zeros_like(hm)
    w = g / (hm + hp)
    return -w, np.zeros_like(hm), w


def _apply(a, b, c, u):
    """Interior part of a tridiagonal operator applied to the full vector u."""
    return a * u[:-2] + b * u[1:-1] + c * u[2:]


def _banded(a, b, c, n, dt, theta, far):
    """Rows of I - theta dt L for all n nodes, in solve_banded layout."""
    ab = np.zeros((3, n))
    ab[1, 0] = 1.0
    ab[1, 1:-1] = 1.0 - theta * dt * b
    ab[0, 2:] = -theta * dt * c
    ab[2, :-2] = -theta * dt * a
    if far == "dirichlet":
        ab[1, -1] = 1.0
    return ab


def solve_halfline(
    problem: HalfLineProblem,
    scheme: str = "upwind",
    time_theta: float = 1.0,
    peclet_cap: float = 2.0,
) -> SpaceTimeField1D:
    """March the half-line problem with Dirichlet 0 at the axis.

    ``scheme`` is ``"upwind"`` (default, monotone) or ``"centered"``;
    ``time_theta`` is 1 for backward Euler, 0.5 for Crank-Nicolson.
    """
    if scheme not in ("upwind", "centered"):
        raise ValueError("scheme must be 'upwind' or 'centered'")
    x = problem.grid.nodes
    ts = problem.times.nodes
    n = x.size
    a2, b2, c2, hm, hp = _d2_coefficients(x)
    neumann = problem.far == "zero_neumann"
    if neumann:
        # ghost node mirrors u_{N-2}; fold it into the last row
        h_last = x[-1] - x[-2]
        a_last = 2.0 / h_last**2

    u = np.asarray(problem.initial(x), dtype=float).copy()
    u[0] = 0.0
    if not neumann:
        u[-1] = problem.far_value(0.0)
    out = np.empty((ts.size, n))
    out[0] = u
    forcing = problem.forcing
    for k in range(1, ts.size):
        t0, t1 = ts[k - 1], ts[k]
        dt = t1 - t0
        g = problem.drift.mean_on(t0, t1)
        if scheme == "centered" and abs(g) * float(np.max(hp)) > peclet_cap:
            raise GridTooCoarse(f"cell Peclet {abs(g) * np.max(hp):.3g} exceeds cap {peclet_cap}")
        ad, bd, cd = _drift_coefficients(g, hm, hp, scheme)
        a, b, c = a2 + ad, b2 + bd, c2 + cd
        ab = _banded(a, b, c, n, dt, time_theta, "neumann" if neumann else "dirichlet")
        rhs = np.empty(n)
        rhs[0] = 0.0
        rhs[1:-1] = u[1:-1]
        if time_theta < 1.0:
            rhs[1:-1] += (1.0 - time_theta) * dt * _apply(a, b, c, u)
        if forcing is not None:
            fx = time_theta * np.asarray(forcing(x, t1)) + (1.0 - time_theta) * np.asarray(forcing(x, t0))
            rhs[1:-1] += dt * fx[1:-1]
        if neumann:
            # last node: L u = a_last (u_{N-2} - u_{N-1}) (drift term vanishes with zero slope)
            ab[1, -1] = 1.0 + time_theta * dt * a_last
            ab[2, -2] = -time_theta * dt * a_last
            rhs[-1] = u[-1]
            if time_theta < 1.0:
                rhs[-1] += (1.0 - time_theta) * dt * a_last * (u[-2] - u[-1])
            if forcing is not None:
                rhs[-1] += dt * fx[-1]
        else:
            rhs[-1] = problem.far_value(t1)
        u = solve_banded((1, 1), ab, rhs, check_finite=False)
        if not np.all(np.isfinite(u)):
            raise NonFiniteValue(f"non-finite value at step {k} (t={t1:.6g})")
        out[k] = u
    tag = f"solve_halfline[{scheme},{'BE' if time_theta == 1.0 else f'theta={time_theta}'}]"
    meta = {"drift": problem.drift.to_config(), "scheme": scheme, "far": problem.far}
    return SpaceTimeField1D(problem.grid, problem.times, out, tag, meta=meta)


def discrete_residual(values: np.ndarray, grid: Grid1D, times: TimeGrid, drift: DriftProfile) -> np.ndarray:
    """Backward-Euler residual  (u^{n+1}-u^n)/dt - D2 u^{n+1} - g D+ u^{n+1}  at interior nodes."""
    x = grid.nodes
    a2, b2, c2, hm, hp = _d2_coefficients(x)
    res = np.empty((times.size - 1, x.size - 2))
    for k in range(1, times.size):
        t0, t1 = times.nodes[k - 1], times.nodes[k]
        g = drift.mean_on(t0, t1)
        ad, bd, cd = _drift_coefficients(g, hm, hp, "upwind")
        lu = _apply(a2 + ad, b2 + bd, c2 + cd, values[k])
        res[k - 1] = (values[k, 1:-1] - values[k - 1, 1:-1]) / (t1 - t0) - lu
    return res


# ---------------------------------------------------------------------------
# whole-line oracle
# ---------------------------------------------------------------------------


def _tail_radius(m: float, t: float, growth: float, tol: float) -> float:
    """Half-width X with the Gaussian tail beyond |x| > X below tol for data of linear growth."""
    X = 2.0
    while True:
        bound = growth * ((1.0 + abs(m)) * erfc(X) + 2.0 * math.sqrt(t / math.pi) * math.exp(-X * X))
        if bound < tol or X > 40:
            return X
        X += 0.25


def explicit_wholeline(
    initial: Callable,
    drift: DriftProfile,
    r: float,
    t: float,
    tol: float = 1e-10,
    growth: float = 1.0,
    breakpoints: Sequence[float] = (),
    method: str = "auto",
) -> float:
    """Whole-line solution (4 pi t)^{-1/2} int exp(-|r - y + A(t)|^2 / 4t) u0(y) dy.

    Gauss-Hermite is tried first; if it does not settle (rough data), a
    truncated-domain composite Gauss-Legendre rule is refined instead, with
    ``breakpoints`` (in y) used as panel edges.
    """
    if t == 0:
        return float(initial(np.asarray(r, dtype=float)))
    if t < 0:
        raise ValueError("t must be nonnegative")
    m = float(r) + float(drift.A(t))
    s = 2.0 * math.sqrt(t)

    def integrand_mean(xq, wq):
        return float(np.dot(wq, np.asarray(initial(m + s * xq), dtype=float)))

    if method in ("auto", "hermite"):
        prev = None
        for npts in (32, 64, 128, 256):
            xq, wq = np.polynomial.hermite.hermgauss(npts)
            val = integrand_mean(xq, wq) / math.sqrt(math.pi)
            if prev is not None and abs(val - prev) < tol * max(1.0, abs(val)):
                return val
            prev = val
        if method == "hermite":
            raise QuadratureNotConverged("Gauss-Hermite did not settle")

    X = _tail_radius(m, t, growth, tol / 10)
    edges = sorted({-X, X, *[(b - m) / s for b in breakpoints if -X < (b - m) / s < X]})
    xg, wg = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = 8
    for _ in range(12):
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            cuts = np.linspace(lo, hi, panels + 1)
            mid = 0.5 * (cuts[1:] + cuts[:-1])[:, None]
            half = 0.5 * (cuts[1:] - cuts[:-1])[:, None]
            xq = (mid + half * xg).ravel()
            wq = (half * wg).ravel() * np.exp(-xq * xq)
            total += integrand_mean(xq, wq)
        val = total / math.sqrt(math.pi)
        if prev is not None and abs(val - prev) < tol * max(1.0, abs(val)):
            return val
        prev = val
        panels *= 2
    raise QuadratureNotConverged(f"truncated quadrature still moving by {abs(val - prev):.3g}")


# ---------------------------------------------------------------------------
# Robin route
# ---------------------------------------------------------------------------


def solve_robin(drift: DriftProfile, grid: Grid1D, times: TimeGrid) -> tuple[SpaceTimeField1D, SpaceTimeField1D]:
    """Solve v_t = v_rr + g v_r with v_r(0) + g v(0) = 0, v(., 0) = 1; return (v, int_0^rho v).

    The Robin condition enters through a ghost node v_{-1} = v_1 + 2 h g v_0
    (second order); the far end keeps v = 1.
    """
    x = grid.nodes
    ts = times.nodes
    n = x.size
    a2, b2, c2, hm, hp = _d2_coefficients(x)
    h0 = x[1] - x[0]
    v = np.ones(n)
    out = np.empty((ts.size, n))
    out[0] = v
    for k in range(1, ts.size):
        t0, t1 = ts[k - 1], ts[k]
        dt = t1 - t0
        g = drift.mean_on(t0, t1)
        if g < 0:
            raise ValueError("Robin route needs a nonnegative drift")
        ad, bd, cd = _drift_coefficients(g, hm, hp, "upwind")
        ab = _banded(a2 + ad, b2 + bd, c2 + cd, n, dt, 1.0, "dirichlet")
        # row 0: ghost-node Robin closure plus forward upwind drift
        b0 = -2.0 / h0**2 + 2.0 * g / h0 - g / h0
        c0 = 2.0 / h0**2 + g / h0
        ab[1, 0] = 1.0 - dt * b0
        ab[0, 1] = -dt * c0
        rhs = v.copy()
        rhs[-1] = 1.0
        v = solve_banded((1, 1), ab, rhs, check_finite=False)
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue(f"non-finite Robin value at step {k}")
        out[k] = v
    vfield = SpaceTimeField1D(grid, times, out, "solve_robin[v]")
    u = cumulative_trapezoid(out, x, axis=1, initial=0.0)
    return vfield, SpaceTimeField1D(grid, times, u, "solve_robin[int v]")


# ---------------------------------------------------------------------------
# comparison checker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    max_excess: float
    t: float
    rho: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"max_excess": self.max_excess, "t": self.t, "rho": self.rho, "tol": self.tol, "pass": self.passed}


def check_comparison(lower, upper, tol: float = 0.0) -> ComparisonReport:
    """Report max(lower - upper) over a shared space-time grid.

    Either argument may be a callable ``(rho_array, t) -> values`` that is
    tabulated on the other argument's grid.
    """
    if callable(lower) and callable(upper):
        raise TypeError("at least one argument must be a field")
    ref = upper if callable(lower) else lower
    lo = _as_values(lower, ref)
    up = _as_values(upper, ref)
    diff = lo - up
    k, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[k, j])
    return ComparisonReport(worst, float(ref.times.nodes[k]), float(ref.positions(k)[j]), tol, worst <= tol)


def _as_values(obj, ref: SpaceTimeField1D) -> np.ndarray:
    if callable(obj) and not isinstance(obj, SpaceTimeField1D):
        return np.array([obj(ref.positions(k), t) for k, t in enumerate(ref.times.nodes)], dtype=float)
    if not obj.shares_grid(ref):
        raise GridMismatch("fields do not share grid and times")
    return np.asarray(obj.values)
