"""The modulus of continuity Lambda(r, t) and its companions.

Lambda solves  L_rr - L_r / r + g(t) L_r - L_t = 0,  Lambda(0, t) = 0,
Lambda(r, 0) = Lambda_0(r).  Three independent constructions are provided:

* :func:`solve_lambda` marches f = Lambda / r on a cell-centred grid.  The
  equation for f is discretised in the form
  f_t = (1/r) d_r( r d_r((1/r) d_r(r f)) ) ... written through Lambda = r f, so
  that r f obeys a conservative, upwind, M-matrix scheme.
* :func:`picard_lambda_oracle` iterates the heat-kernel integral equation of
  the angular projection f cos(theta) in the plane.
* :func:`solve_truncated_ladder` solves the equations of d_r Lambda on
  [1/i, L] (where the 1/r^2 potential is bounded) and integrates them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded
from scipy.special import ive

from .core import DriftProfile, Grid1D, InitialData1D, SpaceTimeField1D, TimeGrid, make_lambda_zero
from .errors import AxisCellBlowup, ContractionFailed, GridMismatch, GridTooCoarse, NonFiniteValue


@dataclass(frozen=True)
class LambdaProblem:
    drift: DriftProfile
    alpha0: float
    grid: Grid1D
    times: TimeGrid

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.grid.cell_centered:
            raise GridMismatch("Lambda needs a cell-centred grid (Grid1D.cell_centered_grid)")
        if self.drift.kind not in ("type_i", "zero", "constant") or self.drift.scale < 0 or self.drift.c < 0:
            raise ValueError("Lambda drift must be a nonnegative type_i, constant or zero profile")
        if self.times.t_end >= self.drift.horizon:
            raise ValueError("time grid reaches the drift horizon")

    @property
    def initial(self) -> InitialData1D:
        return make_lambda_zero(self.alpha0)


def _lambda_rows(x: np.ndarray, g: float):
    """Coefficients (a, b, c) of  r d_r((1/r) d_r L) + g D L  at nodes 1..N-2 of a cell-centred grid.

    Faces sit halfway between nodes; at the first cell the axis flux
    (1/r) L_r -> 2 L_1 / r_1^2 (exact for L ~ r^2) closes the stencil.
    """
    xi = x[1:-1]
    hm = xi - x[:-2]
    hp = x[2:] - xi
    face_m = 0.5 * (x[:-2] + xi)
    face_m[0] = 0.0  # the first cell is [0, h]
    face_p = 0.5 * (xi + x[2:])
    width = face_p - face_m
    a = np.empty_like(xi)
    a[1:] = xi[1:] / (width[1:] * hm[1:] * face_m[1:])
    a[0] = 0.0
    c = xi / (width * hp * face_p)
    b = -(a + c)
    b[0] -= 2.0 / (xi[0] * width[0])
    if g >= 0:
        c = c + g / hp
        b = b - g / hp
    else:
        a = a - g / hm
        b = b + g / hm
    return a, b, c


def solve_lambda(problem: LambdaProblem) -> SpaceTimeField1D:
    """March f = Lambda / r by backward Euler and return Lambda = r f.

    The far node carries f = alpha0 (1 + A(t) / L), i.e. Lambda = alpha0 (L + A(t)).
    ``meta["f"]`` holds the f values (0 on the axis).
    """
    x = problem.grid.nodes
    ts = problem.times.nodes
    n = x.size
    L = x[-1]
    a0 = problem.alpha0
    lam0 = np.asarray(problem.initial(x), dtype=float)
    f = np.zeros(n)
    f[1:] = lam0[1:] / x[1:]
    F = np.empty((ts.size, n))
    F[0] = f
    for k in range(1, ts.size):
        t0, t1 = ts[k - 1], ts[k]
        dt = t1 - t0
        g = problem.drift.mean_on(t0, t1)
        a, b, c = _lambda_rows(x, g)
        # similarity transform to the unknown f = Lambda / r
        af = a * x[:-2] / x[1:-1]
        cf = c * x[2:] / x[1:-1]
        ab = np.zeros((3, n))
        ab[1, 0] = 1.0
        ab[1, 1:-1] = 1.0 - dt * b
        ab[0, 2:] = -dt * cf
        ab[2, :-2] = -dt * af
        ab[1, -1] = 1.0
        rhs = f.copy()
        rhs[0] = 0.0
        rhs[-1] = a0 * (1.0 + float(problem.drift.A(t1)) / L)
        f = solve_banded((1, 1), ab, rhs, check_finite=False)
        if not np.isfinite(f[1]):
            raise AxisCellBlowup(f"first cell diverged at step {k}")
        if not np.all(np.isfinite(f)):
            raise NonFiniteValue(f"non-finite f at step {k}")
        F[k] = f
    meta = {"f": F, "drift": problem.drift.to_config(), "alpha0": a0}
    return SpaceTimeField1D(problem.grid, problem.times, F * x[None, :], "solve_lambda", meta=meta)


def lambda_over_r(lam: SpaceTimeField1D) -> np.ndarray:
    """f = Lambda / r per slice, 0 on the axis."""
    x = lam.grid.nodes
    out = np.zeros_like(np.asarray(lam.values))
    out[:, 1:] = lam.values[:, 1:] / x[1:]
    return out


@dataclass(frozen=True)
class MonotonicityReport:
    min_gradient: float
    t: float
    r: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"min_gradient": self.min_gradient, "t": self.t, "r": self.r, "tol": self.tol, "pass": self.passed}


def verify_monotonicity(lam: SpaceTimeField1D, tol: float = 1e-6) -> MonotonicityReport:
    """Smallest forward difference quotient of Lambda over all slices."""
    x = lam.grid.nodes
    grad = np.diff(np.asarray(lam.values), axis=1) / np.diff(x)
    k, j = np.unravel_index(int(np.argmin(grad)), grad.shape)
    m = float(grad[k, j])
    return MonotonicityReport(m, float(lam.times.nodes[k]), float(0.5 * (x[j] + x[j + 1])), tol, m >= -tol)


# ---------------------------------------------------------------------------
# heat-kernel Picard oracle
# ---------------------------------------------------------------------------


def _kernel(r, rho, tau):
    """K(r, rho, tau) = angular average of the planar heat kernel against cos: (1/2tau) e^{-(r-rho)^2/4tau} I1e(r rho/2tau)."""
    z = r * rho / (2.0 * tau)
    return np.exp(-((r - rho) ** 2) / (4.0 * tau)) * ive(1, z) / (2.0 * tau)


def _kernel_drho(r, rho, tau):
    """d/d rho of :func:`_kernel`."""
    z = r * rho / (2.0 * tau)
    i0 = ive(0, z)
    i1 = ive(1, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        i1z = np.where(z > 0, i1 / np.where(z > 0, z, 1.0), 0.5)
    gauss = np.exp(-((r - rho) ** 2) / (4.0 * tau)) / (2.0 * tau)
    return gauss * (-(rho / (2.0 * tau)) * i1 + (r / (2.0 * tau)) * (i0 - i1z))


class _HatQuadrature:
    """Moments  M[j, m] = int kernel(r_j, rho, tau) phi_m(rho) rho d rho  for hat functions phi_m.

    Collocation points r_j are the hat nodes themselves, so the quadrature
    pattern around every r_j is the same set of offsets.  Offsets cover
    +-12 sqrt(tau), are split at the nodes and into pieces no longer than
    sqrt(tau), and carry Gauss-Legendre points.
    """

    def __init__(self, nodes: np.ndarray, order: int = 8):
        self.nodes = nodes
        self.h = float(nodes[1] - nodes[0])
        self.R = float(nodes[-1])
        self.xg, self.wg = np.polynomial.legendre.leggauss(order)

    def _offsets(self, tau: float):
        h = self.h
        W = min(12.0 * math.sqrt(tau), self.R)
        k = math.ceil(W / h)
        edges = np.arange(-k, k + 1) * h
        piece = min(h, math.sqrt(tau))
        sub = max(1, math.ceil(h / piece - 1e-9))
        fine = (edges[:-1, None] + (np.arange(sub) / sub)[None, :] * h).ravel()
        cuts = np.append(fine, edges[-1])
        mid = 0.5 * (cuts[1:] + cuts[:-1])
        half = 0.5 * (cuts[1:] - cuts[:-1])
        off = (mid[:, None] + half[:, None] * self.xg[None, :]).ravel()
        w = (half[:, None] * self.wg[None, :]).ravel()
        return off, w

    def moments(self, tau: float, kernel: Callable) -> np.ndarray:
        r = self.nodes
        nn = r.size
        off, w = self._offsets(tau)
        rho = r[:, None] + off[None, :]
        valid = (rho > 0) & (rho < self.R)
        rho_c = np.where(valid, rho, 1.0)
        vals = np.where(valid, kernel(r[:, None], rho_c, tau) * rho_c * w[None, :], 0.0)
        m = np.clip(np.floor(rho_c / self.h).astype(int), 0, nn - 2)
        s = rho_c / self.h - m
        rows = np.broadcast_to(np.arange(nn)[:, None], rho.shape)
        out = np.bincount((rows * nn + m).ravel(), (vals * (1.0 - s)).ravel(), nn * nn)
        out += np.bincount((rows * nn + m + 1).ravel(), (vals * s).ravel(), nn * nn)
        return out.reshape(nn, nn)


@dataclass
class PicardResult:
    f: SpaceTimeField1D
    differences: list = field(default_factory=list)
    subintervals: list = field(default_factory=list)


def picard_lambda_oracle(
    problem: LambdaProblem,
    iterations: int = 12,
    t_end: float = 0.5,
    R: float = 12.0,
    spacing: float = 1 / 16,
    dt: float = 1 / 64,
    initial_f: Optional[Callable] = None,
    rate_cap: float = 0.5,
    max_subinterval: float = 0.125,
) -> PicardResult:
    """Fixed point of  f(t) = K(t) * f(0) - int_0^t g(s) dK(t - s) * f(s) ds  by Picard iteration.

    The plane problem for f cos(theta) reduces, after angular integration, to
    the radial kernels K and dK/drho above.  f is represented by hat
    functions on a uniform grid of [0, R]; g f is linear in time between
    steps of length ``dt``; the horizon is split into sub-intervals H with
    sup g * sqrt(H) <= ``rate_cap``, each restarted from the previous end
    state.  Returns f at the grid nodes and the successive-iterate sup
    differences (one list per sub-interval).
    """
    nodes = np.arange(int(round(R / spacing)) + 1) * spacing
    quad = _HatQuadrature(nodes)
    drift = problem.drift
    if initial_f is None:
        lam0 = problem.initial(nodes)
        f0 = np.zeros_like(nodes)
        f0[1:] = lam0[1:] / nodes[1:]
    else:
        f0 = np.asarray(initial_f(nodes), dtype=float)

    n_total = int(round(t_end / dt))
    if abs(n_total * dt - t_end) > 1e-12:
        raise ValueError("t_end must be a multiple of dt")
    g_sup = float(np.max(np.abs(drift.g(np.array([0.0, t_end]))))) if drift.kind != "zero" else 0.0
    H = min(t_end, max_subinterval) if g_sup == 0 else min(t_end, max_subinterval, (rate_cap / g_sup) ** 2)
    steps_per = max(1, int(H / dt + 1e-9))

    # time-lag weight matrices, shared by all sub-intervals
    xg, wg = np.polynomial.legendre.leggauss(12)
    E = [None] + [quad.moments(p * dt, _kernel) for p in range(1, steps_per + 1)]
    DL = [None]
    DR = [None]
    for p in range(1, steps_per + 1 if g_sup > 0 else 1):
        mL = np.zeros((nodes.size, nodes.size))
        mR = np.zeros_like(mL)
        if p == 1:
            # tau = dt sigma^2 removes the sqrt(tau) behaviour at zero lag
            sig = 0.5 * (xg + 1.0)
            for s_, w_ in zip(sig, 0.5 * wg):
                tau = dt * s_ * s_
                mom = quad.moments(tau, _kernel_drho) * (2.0 * dt * s_ * w_)
                mL += mom * (tau / dt)
                mR += mom * (1.0 - tau / dt)
        else:
            for x_, w_ in zip(xg, wg):
                tau = (p - 0.5) * dt + 0.5 * dt * x_
                mom = quad.moments(tau, _kernel_drho) * (0.5 * dt * w_)
                lam = (tau - (p - 1) * dt) / dt
                mL += mom * lam
                mR += mom * (1.0 - lam)
        DL.append(mL)
        DR.append(mR)

    out = [f0.copy()]
    diffs = []
    subs = []
    start = 0
    while start < n_total:
        m = min(steps_per, n_total - start)
        t_nodes = (start + np.arange(m + 1)) * dt
        gs = np.asarray(drift.g(t_nodes), dtype=float)
        base = out[-1]
        traj = np.tile(base, (m + 1, 1))
        free = np.array([base] + [E[p] @ base for p in range(1, m + 1)])
        hist = []
        for _ in range(iterations):
            q = gs[:, None] * traj
            new = free.copy()
            for nstep in range(1, m + 1 if g_sup > 0 else 1):
                acc = np.zeros_like(base)
                for l in range(nstep):
                    p = nstep - l
                    acc += DL[p] @ q[l] + DR[p] @ q[l + 1]
                new[nstep] -= acc
            hist.append(float(np.max(np.abs(new - traj))))
            traj = new
            if not np.all(np.isfinite(traj)):
                raise ContractionFailed("Picard iterates became non-finite")
        if len(hist) > 2 and hist[-1] > hist[0] and hist[-1] > 1e-10:
            raise ContractionFailed(f"iterates not contracting: {hist}")
        diffs.append(hist)
        subs.append((float(t_nodes[0]), float(t_nodes[-1])))
        out.extend(traj[1:])
        start += m
    times = TimeGrid(np.arange(n_total + 1) * dt, drift.horizon)
    field_ = SpaceTimeField1D(Grid1D(nodes), times, np.array(out), "picard_lambda_oracle")
    return PicardResult(field_, diffs, subs)


def compare_f(picard: SpaceTimeField1D, lam: SpaceTimeField1D, r_max: float = 6.0) -> tuple[float, tuple]:
    """Sup relative difference between the Picard f and Lambda / r from :func:`solve_lambda`.

    Slices are matched by time; Lambda / r is interpolated (PCHIP) to the
    Picard nodes with 0 < r <= r_max.
    """
    f_dir = lambda_over_r(lam)
    xr = lam.grid.nodes
    r = picard.grid.nodes
    sel = (r > 0) & (r <= r_max)
    worst, where, ref = 0.0, (0.0, 0.0), 0.0
    for n, t in enumerate(picard.times.nodes):
        k = lam.times.index_of(t)
        if abs(lam.times.nodes[k] - t) > 1e-9:
            raise GridMismatch(f"no Lambda slice at t={t}")
        fd = PchipInterpolator(xr, f_dir[k])(r[sel])
        d = np.abs(picard.values[n][sel] - fd)
        ref = max(ref, float(np.max(np.abs(fd))))
        j = int(np.argmax(d))
        if d[j] > worst:
            worst, where = float(d[j]), (float(t), float(r[sel][j]))
    return worst / ref, where


# ---------------------------------------------------------------------------
# truncated ladder
# ---------------------------------------------------------------------------


def smoothstep_cutoff(i: int):
    """phi_i(r) = S(i r - 1) with S(s) = 3s^2 - 2s^3 on [0, 1]: 0 below 1/i, 1 above 2/i."""

    def phi(r):
        s = np.clip(i * np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
        return s * s * (3.0 - 2.0 * s)

    return phi


@dataclass
class TruncatedLadder:
    indices: tuple = (4, 8, 16)
    spacing: float = 1 / 64
    Z: dict = field(default_factory=dict)
    Lam: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(i < 4 for i in self.indices):
            raise ValueError("ladder indices must be >= 4")
        self.indices = tuple(sorted(self.indices))

    def cutoff(self, i: int):
        return smoothstep_cutoff(i)


def _ladder_grid(i: int, spacing: float, L: float) -> np.ndarray:
    n = int(round((L - 1.0 / i) / spacing))
    return 1.0 / i + spacing * np.arange(n + 1)


def solve_truncated_ladder(problem: LambdaProblem, ladder: Optional[TruncatedLadder] = None) -> TruncatedLadder:
    """Fill ``ladder`` with Z_i on [1/i, L] and Lambda_i = int_{1/i}^r Z_i.

    Z_i obeys  Z_rr - Z_r / r + g Z_r + Z / r^2 - Z_t = 0, Z_i(1/i) = 0,
    Z_i(L) = alpha0, Z_i(., 0) = phi_i Lambda_0'.  The scheme is conservative
    in r d_r((1/r) d_r Z) with upwind drift and the potential implicit; it
    is an M-matrix scheme provided every step is shorter than (1/i)^2.
    """
    ladder = TruncatedLadder() if ladder is None else ladder
    ts = problem.times.nodes
    L = problem.grid.L
    data = problem.initial
    max_dt = float(np.max(np.diff(ts)))
    for i in ladder.indices:
        r = _ladder_grid(i, ladder.spacing, L)
        if max_dt >= r[0] ** 2:
            raise GridTooCoarse(f"time step {max_dt:.3g} not below (1/{i})^2 = {r[0] ** 2:.3g}")
        n = r.size
        ri = r[1:-1]
        hm = ri - r[:-2]
        hp = r[2:] - ri
        fm = 0.5 * (r[:-2] + ri)
        fp = 0.5 * (ri + r[2:])
        w = fp - fm
        a_d = ri / (w * hm * fm)
        c_d = ri / (w * hp * fp)
        pot = 1.0 / ri**2
        z = ladder.cutoff(i)(r) * data.derivative(r)
        z[0] = 0.0
        z[-1] = problem.alpha0
        out = np.empty((ts.size, n))
        out[0] = z
        for k in range(1, ts.size):
            dt = ts[k] - ts[k - 1]
            g = problem.drift.mean_on(ts[k - 1], ts[k])
            c = c_d + g / hp
            b = -(a_d + c_d) - g / hp + pot
            ab = np.zeros((3, n))
            ab[1, 0] = 1.0
            ab[1, -1] = 1.0
            ab[1, 1:-1] = 1.0 - dt * b
            ab[0, 2:] = -dt * c
            ab[2, :-2] = -dt * a_d
            rhs = z.copy()
            rhs[0] = 0.0
            rhs[-1] = problem.alpha0
            z = solve_banded((1, 1), ab, rhs, check_finite=False)
            if not np.all(np.isfinite(z)):
                raise NonFiniteValue(f"Z_{i} non-finite at step {k}")
            out[k] = z
        zgrid = Grid1D(np.concatenate([[0.0], r]), "truncated")
        padded = np.concatenate([np.zeros((ts.size, 1)), out], axis=1)
        ladder.Z[i] = SpaceTimeField1D(zgrid, problem.times, padded, f"Z_{i}", meta={"r_min": float(r[0])})
        lam_i = cumulative_trapezoid(out, r, axis=1, initial=0.0)
        ladder.Lam[i] = SpaceTimeField1D(
            zgrid, problem.times, np.concatenate([np.zeros((ts.size, 1)), lam_i], axis=1), f"Lambda_{i}",
            meta={"r_min": float(r[0])},
        )
    return ladder


def ladder_report(ladder: TruncatedLadder, lam: SpaceTimeField1D, r_max: Optional[float] = None) -> dict:
    """Nonnegativity, ordering and domination checks for a filled ladder.

    Z and Lambda_i carry a padding node at r = 0 that is skipped.  Lambda is
    interpolated to ladder nodes with r <= r_max (default L/2) by PCHIP.
    """
    r_max = 0.5 * lam.grid.L if r_max is None else r_max
    out = {"min_Z": {}, "order": {}, "lambda_excess": {}, "lambda_gap": {}}
    for i in ladder.indices:
        Z = np.asarray(ladder.Z[i].values)[:, 1:]
        out["min_Z"][i] = float(Z.min())
        r = ladder.Lam[i].grid.nodes[1:]
        sel = r <= r_max
        lam_i = np.asarray(ladder.Lam[i].values)[:, 1:][:, sel]
        lam_ref = np.array([PchipInterpolator(lam.grid.nodes, lam.values[k])(r[sel]) for k in range(lam.times.size)])
        diff = lam_i - lam_ref
        out["lambda_excess"][i] = float(diff.max())
        out["lambda_gap"][i] = float(np.abs(diff).max())
    for lo, hi in zip(ladder.indices[:-1], ladder.indices[1:]):
        r_lo = ladder.Z[lo].grid.nodes[1:]
        r_hi = ladder.Z[hi].grid.nodes[1:]
        idx = np.searchsorted(r_hi, r_lo - 1e-12)
        if not np.allclose(r_hi[idx], r_lo, atol=1e-12):
            raise GridMismatch("ladder grids do not nest")
        gap = np.asarray(ladder.Z[hi].values)[:, 1:][:, idx] - np.asarray(ladder.Z[lo].values)[:, 1:]
        out["order"][f"{hi}-{lo}"] = float(gap.min())
    return out
