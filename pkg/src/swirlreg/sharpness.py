"""The logarithmically supercritical counterexample.

phi(r, t) = exp(-a I(t)) eta((h(t) - r)/h(t)) with h(t) = sqrt(1-t) ln(10/(1-t))
and I(t) = int_0^t h^-2 is a subsolution of u_t = u_rr + g u_r for
g(t) = ln(10/(1-t))/sqrt(1-t).  Since I(1) is finite while h(t) -> 0,
any solution above phi keeps a definite value at distance h(t) from a zero
boundary value, so no modulus of continuity survives to t = 1.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LN10, DriftProfile, Grid1D, InitialData1D, TimeGrid, cosine_ramp, cosine_ramp_derivative
from .drift1d import HalfLineProblem, solve_halfline
from .errors import AdmissibilityFailed, HorizonExceeded, NonFiniteValue

A_MIN_COSINE = 0.5 * math.pi**2


@dataclass(frozen=True)
class EtaProfile:
    """Nonincreasing cutoff: 1 on (-inf, 0], 0 on [1, inf).

    ``kind="cosine"`` is the C^1 ramp (1 + cos(pi s))/2, with one-sided
    second derivatives at s = 0 and 1.  ``kind="smooth"`` is the C^inf
    transition built from exp(-1/s).
    """

    a: float
    kind: str = "cosine"
    report: dict = field(default_factory=dict, compare=False)

    def __call__(self, s):
        if self.kind == "cosine":
            return cosine_ramp(s)
        return 1.0 - _smooth_step(s)[0]

    def d1(self, s):
        if self.kind == "cosine":
            return cosine_ramp_derivative(s, 1)
        return -_smooth_step(s)[1]

    def d2(self, s, side: str = "inner"):
        """Second derivative; at the kinks ``side="inner"`` returns the limit from inside (0, 1)."""
        if self.kind == "smooth":
            return -_smooth_step(s)[2]
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s < 1) if side == "outer" else (s >= 0) & (s <= 1)
        return np.where(inside, -0.5 * math.pi**2 * np.cos(math.pi * np.clip(s, 0, 1)), 0.0)


def _smooth_step(s):
    """C^inf step q(s) = e(s)/(e(s) + e(1-s)), e(x) = exp(-1/x) for x > 0, with two derivatives."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    x = np.where(inside, s, 0.5)
    y = 1.0 - x
    # q = 1/(1 + exp(p)), p = 1/x - 1/y
    p = 1.0 / x - 1.0 / y
    dp = -1.0 / x**2 - 1.0 / y**2
    d2p = 2.0 / x**3 - 2.0 / y**3
    with np.errstate(over="ignore"):
        q = 1.0 / (1.0 + np.exp(p))
    w = q * (1.0 - q)  # = -dq/dp
    dq = -w * dp
    d2q = -w * d2p - (1.0 - 2.0 * q) * dp * dq
    q = np.where(inside, q, np.where(s >= 1, 1.0, 0.0))
    return q, np.where(inside, dq, 0.0), np.where(inside, d2q, 0.0)


def build_eta(a: float = A_MIN_COSINE, kind: str = "cosine", n: int = 200_001) -> EtaProfile:
    """Build eta and check eta' <= 0 and eta'' + a eta >= 0 on a fine grid of [0, 1]."""
    if not a > 0:
        raise AdmissibilityFailed("a must be positive")
    if kind not in ("cosine", "smooth"):
        raise ValueError(f"unknown eta kind {kind!r}")
    eta = EtaProfile(float(a), kind)
    s = np.linspace(0.0, 1.0, n)
    lhs = np.minimum(eta.d2(s, "inner") + a * eta(s), eta.d2(s, "outer") + a * eta(s))
    j = int(np.argmin(lhs))
    eta.report.update(min_eta2_plus_a_eta=float(lhs[j]), at_s=float(s[j]), max_eta1=float(eta.d1(s).max()))
    if lhs[j] < -1e-10:
        raise AdmissibilityFailed(f"eta'' + a eta reaches {lhs[j]:.3g} at s={s[j]:.4g} (a={a})")
    if eta.report["max_eta1"] > 0:
        raise AdmissibilityFailed("eta is not nonincreasing")
    return eta


def smooth_eta_threshold(n: int = 200_001) -> float:
    """Smallest a admissible for the smooth eta: max of -eta''/eta over (0, 1)."""
    s = np.linspace(0.0, 1.0, n)[1:-1]
    q, _, d2q = _smooth_step(s)
    ok = (1.0 - q) > 1e-300
    return float(np.max(d2q[ok] / (1.0 - q[ok])))


# ---------------------------------------------------------------------------
# h, the time integral, phi
# ---------------------------------------------------------------------------


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t >= 1.0):
        raise HorizonExceeded("the counterexample lives on t < 1")
    if np.any(t < 0):
        raise ValueError("negative time")
    return t


def h_curve(t):
    t = _check_t(t)
    w = 1.0 - t
    return np.sqrt(w) * np.log(10.0 / w)


def h_curve_derivative(t):
    t = _check_t(t)
    w = 1.0 - t
    return (1.0 - 0.5 * np.log(10.0 / w)) / np.sqrt(w)


def h_inv2_integral(t):
    """int_0^t h^-2 ds = 1/ln 10 - 1/ln(10/(1-t)); tends to 1/ln 10 as t -> 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t > 1) or np.any(t < 0):
        raise HorizonExceeded("t outside [0, 1]")
    with np.errstate(divide="ignore"):
        tail = np.where(t < 1, 1.0 / np.log(10.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return 1.0 / LN10 - tail


@dataclass(frozen=True)
class CounterexampleSpec:
    eta: EtaProfile
    drift: DriftProfile = field(default_factory=DriftProfile.log_supercritical)

    @classmethod
    def default(cls, a: float = A_MIN_COSINE, kind: str = "cosine") -> "CounterexampleSpec":
        return cls(build_eta(a, kind))

    @property
    def a(self) -> float:
        return self.eta.a

    @property
    def floor(self) -> float:
        """exp(-a / ln 10), the lower bound of phi(h(t), t)."""
        return math.exp(-self.a / LN10)

    def decay(self, t):
        return np.exp(-self.a * h_inv2_integral(t))


def phi_eval(spec: CounterexampleSpec, r, t):
    t = _check_t(t)
    h = h_curve(t)
    return spec.decay(t) * spec.eta((h - np.asarray(r, dtype=float)) / h)


def phi_residual(spec: CounterexampleSpec, r, t, side: str = "inner"):
    """(d_rr + g d_r - d_t) phi from closed-form derivatives, r >= 0."""
    t = _check_t(t)
    r = np.asarray(r, dtype=float)
    h = h_curve(t)
    dh = h_curve_derivative(t)
    g = spec.drift.g(t)
    E = spec.decay(t)
    s = (h - r) / h
    e0 = spec.eta(s)
    e1 = spec.eta.d1(s)
    e2 = spec.eta.d2(s, side)
    return E / h**2 * (e2 + spec.a * e0) - E * e1 / h * (g + r * dh / h)


def verify_subsolution(
    spec: CounterexampleSpec, t_max: float = 1 - 1e-4, r_max: float = 3.0, nt: int = 2001, nr: int = 2001
) -> dict:
    """Minimum of the residual over a dense (r, t) window, both one-sided limits at the kinks.

    Time nodes are packed towards t_max (uniform in ln(1 - t)).
    """
    ts = 1.0 - np.geomspace(1.0, 1.0 - t_max, nt)
    ts[0] = 0.0
    rs = np.linspace(0.0, r_max, nr)
    R, T = np.meshgrid(rs, ts)
    res = np.minimum(phi_residual(spec, R, T, "inner"), phi_residual(spec, R, T, "outer"))
    scale = float(np.max(np.abs(res)))
    k, j = np.unravel_index(int(np.argmin(res)), res.shape)
    return {
        "min_residual": float(res[k, j]),
        "witness": {"t": float(ts[k]), "r": float(rs[j])},
        "scale": scale,
        "pass": bool(res[k, j] >= -1e-8 * max(scale, 1.0)),
    }


# ---------------------------------------------------------------------------
# the solver experiment
# ---------------------------------------------------------------------------


def default_collapse_grids(spacing: float = 1 / 256, theta: float = 1 / 64, dt_max: float = 1 / 256):
    grid = Grid1D.uniform(10.0, spacing)
    times = TimeGrid.graded(1.0, theta=theta, dt_max=dt_max, tau_min=1e-4)
    return grid, times


def trace_along_h(u, stride: int = 1) -> dict:
    """Sample u(h(t), t) at the time nodes of ``u`` (every ``stride``-th)."""
    ts = u.times.nodes[::stride]
    idx = np.arange(u.times.size)[::stride]
    hs = h_curve(ts)
    vals = np.array([float(u.sample(np.array([hv]), int(n))[0]) for hv, n in zip(hs, idx)])
    return {"t": ts, "h": hs, "u": vals}


@dataclass
class CollapseReport:
    trace: dict
    contrast: dict
    certificate: dict
    domination: dict
    flags: dict

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        return {"pass": self.passed, "flags": dict(self.flags), "certificate": self.certificate,
                "domination": self.domination}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self, path=None) -> str:
        lines = ["t,h,u_at_h,phi_at_h,contrast_u_at_h"]
        tr, co = self.trace, self.contrast
        for t, h, u, p, c in zip(tr["t"], tr["h"], tr["u"], tr["phi"], co["u"]):
            lines.append(f"{float(t)!r},{float(h)!r},{float(u)!r},{float(p)!r},{float(c)!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


def modulus_collapse_experiment(
    spec: Optional[CounterexampleSpec] = None,
    grid: Optional[Grid1D] = None,
    times: Optional[TimeGrid] = None,
    margin: float = 0.9,
    tail_start: float = 0.9,
    contrast_level: float = 0.05,
    domination_tol: float = 1e-6,
) -> CollapseReport:
    """Solve with the supercritical drift and the TypeI(1, 1) contrast, both from eta data.

    Flags: the supercritical trace stays above ``margin * exp(-a/ln 10)``
    up to the last time node while h falls below 0.12; the solution
    dominates phi to ``domination_tol``; the contrast trace decreases
    monotonically on [tail_start, end] and ends below ``contrast_level``.
    """
    spec = CounterexampleSpec.default() if spec is None else spec
    if grid is None or times is None:
        g0, t0 = default_collapse_grids()
        grid = g0 if grid is None else grid
        times = t0 if times is None else times
    data = InitialData1D.eta_bump()
    contrast_drift = DriftProfile.type_i(1.0, 1.0)
    problems = [HalfLineProblem(d, data, grid, times, far="zero_neumann") for d in (spec.drift, contrast_drift)]
    with ThreadPoolExecutor(max_workers=2) as pool:
        u, uc = pool.map(solve_halfline, problems)
    for f in (u, uc):
        if not np.all(np.isfinite(f.values)):
            raise NonFiniteValue("non-finite solution in the collapse experiment")

    tr = trace_along_h(u)
    tr["phi"] = phi_eval(spec, tr["h"], tr["t"])
    co = trace_along_h(uc)

    phi = phi_eval(spec, grid.nodes[None, :], times.nodes[:, None])
    gap = np.asarray(u.values) - phi
    k, j = np.unravel_index(int(np.argmin(gap)), gap.shape)
    domination = {"min_u_minus_phi": float(gap[k, j]), "t": float(times.nodes[k]), "rho": float(grid.nodes[j]),
                  "tol": domination_tol}

    tail = tr["t"] >= tail_start
    threshold = margin * spec.floor
    cert = {
        "threshold": threshold,
        "floor": spec.floor,
        "inf_u_at_h": float(tr["u"].min()),
        "inf_u_at_h_tail": float(tr["u"][tail].min()) if tail.any() else None,
        "h_end": float(tr["h"][-1]),
        "t_end": float(tr["t"][-1]),
        "contrast_end": float(co["u"][-1]),
        "contrast_max_increase_tail": float(np.max(np.diff(co["u"][tail]))) if tail.sum() > 1 else 0.0,
    }
    flags = {
        "trace_above_threshold": bool(tr["u"].min() >= threshold),
        "h_below_0.12": bool(tr["h"][-1] < 0.12),
        "domination": bool(gap[k, j] >= -domination_tol),
        "contrast_monotone_tail": bool(cert["contrast_max_increase_tail"] <= 0.0),
        "contrast_below_level": bool(co["u"][-1] < contrast_level),
    }
    return CollapseReport(tr, co, cert, domination, flags)
