"""Transport-diffusion of Gamma = r v_theta with a prescribed axisymmetric velocity.

Gamma solves
    Gamma_rr + Gamma_33 - Gamma_r / r - v_r Gamma_r - v_3 Gamma_3 - Gamma_t = 0
on r in [0, L], x3 periodic, with Gamma = 0 on the axis.  Velocities come
from a stream function psi on cell corners (MAC layout), so their discrete
divergence vanishes to rounding.  Each step is a Lie split of two implicit,
upwind, M-matrix sweeps (x3 lines, then r lines).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .core import DriftProfile, Grid1D, SpaceTimeField1D, TimeGrid, cosine_ramp
from .errors import GridMismatch, LowerBoundViolated, NonFiniteValue, PropertyFailed

VELOCITY_FAMILIES = ("zero", "swirl_cell", "stationary", "random")


def _taper(r, scale=1.0):
    """r-profile m(r) = (r/s) exp((1 - (r/s)^2)/2): vanishes at 0, max 1 at r = s, Gaussian decay."""
    q = np.asarray(r, dtype=float) / scale
    return q * np.exp(0.5 * (1.0 - q * q))


@dataclass(frozen=True)
class VelocitySpec:
    """psi(r, x3, t) = amplitude(t) * shape(r, x3).

    ``shape`` is r m(r) zeta(x3) with max|m| = 1 and max|zeta'| <= 1, which
    gives v_r = -amplitude zeta' m >= -amplitude.  ``bound`` is the certified
    profile g(t) with v_r >= -g(t).
    """

    family: str
    shape: Callable = field(compare=False)
    amplitude: Callable = field(compare=False)
    mean_amplitude: Callable = field(compare=False)
    bound: DriftProfile
    params: dict = field(default_factory=dict)
    certified: bool = True
    report: dict = field(default_factory=dict, compare=False)

    def psi(self, r, x3, t):
        return self.amplitude(t) * self.shape(r, x3)

    def components(self, grid: "StripGrid", amp: float):
        """Cell-centred (v_r, v_3) from MAC face velocities of psi = amp * shape."""
        fluxes = self.face_fluxes(grid, amp)
        rvr, rv3 = fluxes
        rf = grid.r_faces
        with np.errstate(divide="ignore", invalid="ignore"):
            vr_face = np.where(rf[:, None] > 0, rvr / np.where(rf[:, None] > 0, rf[:, None], 1.0), 0.0)
        vr = 0.5 * (vr_face[:-1] + vr_face[1:])
        v3 = 0.5 * (rv3[:, :-1] + rv3[:, 1:]) / grid.r_cells[:, None]
        return vr, v3

    def face_fluxes(self, grid: "StripGrid", amp: float):
        """(r v_r) on radial faces and (r v_3) on axial faces, both from corner values of psi."""
        corners = amp * self.shape(grid.r_faces[:, None], grid.x3_faces[None, :])
        rvr = -(corners[:, 1:] - corners[:, :-1]) / grid.dx3
        rv3 = (corners[1:, :] - corners[:-1, :]) / np.diff(grid.r_faces)[:, None]
        return rvr, rv3

    def divergence_residual(self, grid: "StripGrid", amp: float = 1.0) -> float:
        """sup |(1/r) d_r(r v_r) + d_3 v_3| of the MAC field over interior cells."""
        rvr, rv3 = self.face_fluxes(grid, amp)
        div = np.diff(rvr, axis=0) / np.diff(grid.r_faces)[:, None] + np.diff(rv3, axis=1) / grid.dx3
        return float(np.max(np.abs(div / grid.r_cells[:, None])))

    def certify(self, grid: "StripGrid", times: TimeGrid, tol: float = 1e-8) -> dict:
        """Check v_r + g >= -tol with the step-averaged amplitude and bound of every step."""
        worst = math.inf
        witness = None
        ts = times.nodes
        for k in range(1, ts.size):
            amp = self.mean_amplitude(ts[k - 1], ts[k])
            gbar = self.bound.mean_on(ts[k - 1], ts[k])
            vr, _ = self.components(grid, amp)
            m = vr + gbar
            j, i = np.unravel_index(int(np.argmin(m)), m.shape)
            if m[j, i] < worst:
                worst = float(m[j, i])
                witness = {"t": float(ts[k]), "r": float(grid.r_cells[j]), "x3": float(grid.x3[i]), "margin": worst}
        div = max(self.divergence_residual(grid, self.mean_amplitude(ts[k - 1], ts[k])) for k in (1, ts.size - 1))
        rep = {"min_vr_plus_g": worst, "witness": witness, "divergence_residual": div, "pass": worst >= -tol}
        if worst < -tol:
            raise LowerBoundViolated(f"v_r + g reaches {worst:.3g}", witness)
        return rep


def _zeta_family(kind: str, L3: float, shift: float = 0.0, seed: Optional[int] = None, modes: int = 4):
    """zeta(x3) periodic with period L3, max |zeta'| <= 1."""
    w = 2 * math.pi / L3
    if kind == "sin":
        return lambda z: np.sin(w * (np.asarray(z) - shift)) / w
    if kind == "cos":
        return lambda z: np.cos(w * (np.asarray(z) - shift)) / w
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(modes)
    b = rng.standard_normal(modes)
    kk = np.arange(1, modes + 1)
    dense = np.linspace(0, L3, 8192, endpoint=False)
    dz = ((-a[:, None] * np.sin(w * kk[:, None] * dense) + b[:, None] * np.cos(w * kk[:, None] * dense)) * (w * kk[:, None])).sum(0)
    # slope bound from the dense maximum, shrunk to absorb what the sampling misses
    norm = 0.98 / np.max(np.abs(dz))

    def zeta(z):
        z = np.asarray(z, dtype=float) - shift
        ph = w * kk.reshape((-1,) + (1,) * z.ndim) * z
        return norm * (a.reshape(ph.shape[:1] + (1,) * z.ndim) * np.cos(ph) + b.reshape(ph.shape[:1] + (1,) * z.ndim) * np.sin(ph)).sum(0)

    return zeta


def make_velocity(
    family: str,
    params: Optional[dict] = None,
    drift: Optional[DriftProfile] = None,
    grid: Optional["StripGrid"] = None,
    times: Optional[TimeGrid] = None,
    certify: bool = True,
) -> VelocitySpec:
    """Build a stream-function velocity and certify v_r >= -g on ``grid`` x ``times``.

    Families: ``zero``; ``swirl_cell`` (zeta = sin, or cos with
    ``parity="even"``); ``stationary`` (time-independent, amplitude g(0));
    ``random`` (4 Fourier modes from ``seed``, random radial scale).
    ``params["amplitude"]`` multiplies psi (values above 1 break the bound
    and need ``certify=False``); ``params["shift"]`` translates in x3.
    """
    params = dict(params or {})
    drift = DriftProfile.type_i(1.0, 1.0) if drift is None else drift
    if family not in VELOCITY_FAMILIES:
        raise ValueError(f"unknown velocity family {family!r}")
    L3 = float(params.get("L3", 8.0))
    shift = float(params.get("shift", 0.0))
    scale = float(params.get("amplitude", 1.0))
    radial = 1.0
    if family == "zero":
        shape = lambda r, z: np.zeros(np.broadcast(np.asarray(r), np.asarray(z)).shape)  # noqa: E731
    else:
        if family == "random":
            seed = int(params.get("seed", 0))
            zeta = _zeta_family("random", L3, shift, seed)
            radial = float(np.random.default_rng(seed + 10_000).uniform(0.5, 2.0))
        else:
            zeta = _zeta_family("cos" if params.get("parity") == "even" else "sin", L3, shift)

        def shape(r, z, zeta=zeta, radial=radial):
            return scale * np.asarray(r) * _taper(r, radial) * zeta(z)

    if family == "stationary":
        g0 = float(drift.g(0.0))
        amplitude = lambda t: g0  # noqa: E731
        mean_amplitude = lambda t0, t1: g0  # noqa: E731
    else:
        amplitude = lambda t: float(drift.g(t))  # noqa: E731
        mean_amplitude = drift.mean_on
    params.update(L3=L3, shift=shift, amplitude=scale, radial_scale=radial)
    spec = VelocitySpec(family, shape, amplitude, mean_amplitude, drift, params, certify)
    if certify:
        grid = StripGrid.default(L3=L3) if grid is None else grid
        times = TimeGrid.graded(drift.horizon, dt_max=drift.horizon / 64) if times is None else times
        spec.report.update(spec.certify(grid, times))
    return spec


# ---------------------------------------------------------------------------
# grid, field, initial data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StripGrid:
    """Cell-centred radii (axis node 0 first, far node last) times periodic x3 cells."""

    r: Grid1D
    n3: int = 64
    L3: float = 8.0

    def __post_init__(self):
        if not self.r.cell_centered:
            raise GridMismatch("radial grid must be cell-centred")

    @classmethod
    def default(cls, L: float = 10.0, dr: float = 1 / 32, n3: int = 64, L3: float = 8.0) -> "StripGrid":
        return cls(Grid1D.cell_centered_grid(L, dr), n3, L3)

    @property
    def dx3(self) -> float:
        return self.L3 / self.n3

    @property
    def x3(self) -> np.ndarray:
        return -0.5 * self.L3 + (np.arange(self.n3) + 0.5) * self.dx3

    @property
    def x3_faces(self) -> np.ndarray:
        return -0.5 * self.L3 + np.arange(self.n3 + 1) * self.dx3

    @property
    def r_cells(self) -> np.ndarray:
        """Interior radial unknowns (nodes 1 .. N-2)."""
        return self.r.nodes[1:-1]

    @property
    def r_faces(self) -> np.ndarray:
        x = self.r.nodes
        faces = 0.5 * (x[1:-2] + x[2:-1])
        return np.concatenate([[0.0], faces, [0.5 * (x[-2] + x[-1])]])


def bump(x3, width: float = 2.0):
    """cos^2 bump of half-width ``width``, 1 at x3 = 0."""
    z = np.abs(np.asarray(x3, dtype=float)) / width
    return np.where(z < 1, np.cos(0.5 * np.pi * np.minimum(z, 1.0)) ** 2, 0.0)


def odd_bump(x3, width: float = 2.0):
    z = np.asarray(x3, dtype=float) / width
    return np.where(np.abs(z) < 1, np.sin(np.pi * np.clip(z, -1, 1)), 0.0)


def default_gamma0(alpha0: float = 1.0, profile: Callable = bump, shift: float = 0.0):
    """Gamma_0 = min(alpha0 r^2, alpha0 r) * profile(x3 - shift)."""

    def g0(r, x3):
        r = np.asarray(r, dtype=float)
        return np.minimum(alpha0 * r * r, alpha0 * r) * profile(np.asarray(x3) - shift)

    return g0


@dataclass(frozen=True)
class GammaProblem:
    velocity: VelocitySpec
    gamma0: Callable = field(compare=False)
    alpha0: float
    grid: StripGrid
    times: TimeGrid

    def __post_init__(self):
        r = self.grid.r.nodes
        vals = self.gamma0(r[:, None], self.grid.x3[None, :])
        if np.max(np.abs(vals[0])) > 0:
            raise ValueError("Gamma_0 must vanish on the axis")
        if np.any(np.abs(vals) > self.alpha0 * r[:, None] * (1 + 1e-12) + 1e-14):
            raise ValueError("|Gamma_0| must stay below alpha0 r")


@dataclass(frozen=True)
class AxiField2D:
    """Gamma on (r node, x3 cell) at stored times, plus max_x3 |Gamma| at every step.

    ``envelope[k, j]`` = max over x3 of |Gamma(r_j, x3, t_k)| for all time
    nodes of the solve; ``values`` keeps only the slices listed in
    ``stored`` (indices into ``times``).
    """

    grid: StripGrid
    times: TimeGrid
    values: np.ndarray
    stored: np.ndarray
    envelope: np.ndarray
    provenance: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for arr in (self.values, self.envelope):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteValue("non-finite Gamma")
        if self.envelope.shape != (self.times.size, self.grid.r.size):
            raise GridMismatch("envelope shape does not match grid and times")

    @property
    def sup_by_time(self) -> np.ndarray:
        return self.envelope.max(axis=1)

    def to_csv(self, path=None) -> str:
        """Columns t, r, x3, value for the stored slices (round-trip decimals)."""
        lines = ["t,r,x3,value"]
        r = self.grid.r.nodes
        x3 = self.grid.x3
        for s, k in enumerate(self.stored):
            t = float(self.times.nodes[k])
            for j, rv in enumerate(r):
                for i, zv in enumerate(x3):
                    lines.append(f"{t!r},{float(rv)!r},{float(zv)!r},{float(self.values[s, j, i])!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    def to_binary(self, path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, r=self.grid.r.nodes, x3=self.grid.x3, times=self.times.nodes, values=self.values,
                     stored=self.stored, envelope=self.envelope)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def _cyclic_solve(lower, diag, upper, rhs):
    """Batch of periodic tridiagonal systems, one per row of the 2-D arrays (Sherman-Morrison).

    Row i of system s reads lower[s,i] x[i-1] + diag[s,i] x[i] + upper[s,i] x[i+1] = rhs[s,i]
    with indices taken modulo the line length.
    """
    ns, m = diag.shape
    gamma = -diag[:, 0]
    d = diag.copy()
    d[:, 0] -= gamma
    d[:, -1] -= lower[:, 0] * upper[:, -1] / gamma
    ab = np.zeros((3, ns * m))
    ab[1] = d.ravel()
    up = upper.copy()
    up[:, -1] = 0.0  # no coupling across lines
    lo = lower.copy()
    lo[:, 0] = 0.0
    ab[0, 1:] = up.ravel()[:-1]
    ab[2, :-1] = lo.ravel()[1:]
    uvec = np.zeros((ns, m))
    uvec[:, 0] = gamma
    uvec[:, -1] = upper[:, -1]
    sol = solve_banded((1, 1), ab, np.stack([rhs.ravel(), uvec.ravel()], axis=1), check_finite=False)
    y = sol[:, 0].reshape(ns, m)
    z = sol[:, 1].reshape(ns, m)
    vy = y[:, 0] + lower[:, 0] / gamma * y[:, -1]
    vz = z[:, 0] + lower[:, 0] / gamma * z[:, -1]
    return y - (vy / (1.0 + vz))[:, None] * z


def _radial_diffusion_rows(x):
    """r d_r((1/r) d_r .) on a cell-centred grid, same closure as the Lambda solver."""
    from .lambda_modulus import _lambda_rows

    return _lambda_rows(x, 0.0)


def solve_gamma(problem: GammaProblem, store_every: Optional[int] = None) -> AxiField2D:
    """March Gamma with Lie-split implicit upwind sweeps.

    The far radial boundary keeps its initial values Gamma_0(L, x3); this is
    dominated by Lambda(L, t) = alpha0 (L + A(t)) and by sup|Gamma_0|.
    """
    grid = problem.grid
    x = grid.r.nodes
    nr = x.size
    n3 = grid.n3
    k3 = grid.dx3
    ts = problem.times.nodes
    store_every = max(1, ts.size // 200) if store_every is None else store_every
    stored = np.unique(np.append(np.arange(0, ts.size, store_every), ts.size - 1))

    G = problem.gamma0(x[:, None], grid.x3[None, :]).astype(float)
    G[0] = 0.0
    far = G[-1].copy()
    a_d, b_d, c_d = _radial_diffusion_rows(x)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    env = np.empty((ts.size, nr))
    env[0] = np.abs(G).max(axis=1)
    keep = [G.copy()]
    for k in range(1, ts.size):
        dt = ts[k] - ts[k - 1]
        amp = problem.velocity.mean_amplitude(ts[k - 1], ts[k])
        vr, v3 = problem.velocity.components(grid, amp)
        # x3 sweep on interior radii: Gamma_33 - v3 Gamma_3
        pos = np.maximum(v3, 0.0)
        neg = np.maximum(-v3, 0.0)
        lo = -dt * (1.0 / k3**2 + pos / k3)
        up = -dt * (1.0 / k3**2 + neg / k3)
        dg = 1.0 + dt * (2.0 / k3**2 + (pos + neg) / k3)
        G[1:-1] = _cyclic_solve(lo, dg, up, G[1:-1])
        # r sweep on every x3 line: r d_r((1/r) Gamma_r) - v_r Gamma_r
        vpos = np.maximum(vr, 0.0)
        vneg = np.maximum(-vr, 0.0)
        a = a_d[:, None] + vpos / hm[:, None]
        c = c_d[:, None] + vneg / hp[:, None]
        b = b_d[:, None] - vpos / hm[:, None] - vneg / hp[:, None]
        ab = np.zeros((3, n3, nr))
        ab[1, :, 0] = 1.0
        ab[1, :, -1] = 1.0
        ab[1, :, 1:-1] = (1.0 - dt * b).T
        ab[0, :, 2:] = (-dt * c).T
        ab[2, :, :-2] = (-dt * a).T
        rhs = G.T.copy()
        rhs[:, 0] = 0.0
        rhs[:, -1] = far
        G = solve_banded((1, 1), ab.reshape(3, -1), rhs.ravel(), check_finite=False).reshape(n3, nr).T.copy()
        if not np.all(np.isfinite(G)):
            raise NonFiniteValue(f"non-finite Gamma at step {k}")
        env[k] = np.abs(G).max(axis=1)
        if k in stored:
            keep.append(G.copy())
    meta = {"velocity": problem.velocity.family, "params": problem.velocity.params, "alpha0": problem.alpha0,
            "gamma0_sup": float(np.max(np.abs(keep[0])))}
    return AxiField2D(grid, problem.times, np.array(keep), stored, env, "solve_gamma", meta)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def verify_chain(gamma: AxiField2D, lam: SpaceTimeField1D, u: SpaceTimeField1D, tol: float = 1e-4) -> dict:
    """|Gamma| <= Lambda <= u on Gamma's radii and times; reports worst margins and locations."""
    if not (gamma.grid.r.same_as(lam.grid) and gamma.times.same_as(lam.times)):
        raise GridMismatch("Lambda must share Gamma's radial grid and time grid")
    if not lam.shares_grid(u):
        raise GridMismatch("u must share Lambda's grid and times")
    left = gamma.envelope - np.asarray(lam.values)
    right = np.asarray(lam.values) - np.asarray(u.values)
    out = {}
    for name, arr in (("gamma_minus_lambda", left), ("lambda_minus_u", right)):
        k, j = np.unravel_index(int(np.argmax(arr)), arr.shape)
        out[name] = {"max": float(arr[k, j]), "t": float(gamma.times.nodes[k]), "r": float(gamma.grid.r.nodes[j])}
    out["tol"] = tol
    out["pass"] = out["gamma_minus_lambda"]["max"] <= tol and out["lambda_minus_u"]["max"] <= tol
    return out


def sup_bound_report(gamma: AxiField2D, tol: float = 1e-8) -> dict:
    sup0 = float(gamma.envelope[0].max())
    sups = gamma.sup_by_time
    steps = np.diff(sups)
    return {
        "gamma0_sup": sup0,
        "max_sup": float(sups.max()),
        "excess": float(sups.max() - sup0),
        "max_increase": float(steps.max()) if steps.size else 0.0,
        "pass": bool(sups.max() <= sup0 + tol),
    }


def swirl_bound_report(
    gamma: AxiField2D, alpha: float, C0: float, alpha0: float, delta: float, raise_on_fail: bool = False
) -> dict:
    """Check |Gamma| <= C0 alpha0 r^alpha for 0 < r <= 1, t >= delta; report the implied |v_theta| bound."""
    r = gamma.grid.r.nodes
    ts = gamma.times.nodes
    sel = (r > 0) & (r <= 1.0)
    late = ts >= delta
    env = gamma.envelope[late][:, sel]
    bound = C0 * alpha0 * r[sel] ** alpha
    if env.size == 0:
        margin = math.inf
        witness = None
    else:
        slack = bound[None, :] - env
        k, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
        margin = float(slack[k, j])
        witness = {"t": float(ts[late][k]), "r": float(r[sel][j]), "gamma": float(env[k, j]), "bound": float(bound[j])}
    swirl = env / r[sel][None, :] if env.size else env
    rep = {
        "alpha": alpha,
        "C0": C0,
        "alpha0": alpha0,
        "delta": delta,
        "min_margin": margin,
        "witness": witness,
        "max_swirl": float(swirl.max()) if env.size else 0.0,
        "swirl_bound_at_r1": C0 * alpha0,
        "pass": margin >= 0.0,
    }
    if raise_on_fail and not rep["pass"]:
        raise PropertyFailed("swirl bound violated", witness)
    return rep


def gamma_slice_as_field(gamma: AxiField2D, i3: int) -> SpaceTimeField1D:
    """One x3 column of the stored slices as a 1-D field (for CSV export or plotting)."""
    times = TimeGrid(gamma.times.nodes[gamma.stored], gamma.times.horizon, gamma.times.tau_min)
    return SpaceTimeField1D(gamma.grid.r, times, gamma.values[:, :, i3], f"gamma[x3={gamma.grid.x3[i3]:.4g}]")
