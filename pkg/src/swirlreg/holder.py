"""Empirical Hölder exponents at the axis and the two half-line lemma verifiers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SpaceTimeField1D
from .errors import InsufficientSamples, NonPositiveSamples, PropertyFailed


@dataclass
class HolderReport:
    """Exponent, constants and pass flags of one verification run.

    ``C`` is the headline constant (C0 for the lemma checks, C* for the
    interior estimate).  ``flags`` maps each checked inequality to a bool.
    """

    alpha: float
    C: float
    window: tuple[float, float]
    residuals: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    C0: Optional[float] = None
    C1: Optional[float] = None
    rho0: Optional[float] = None
    rho1: Optional[float] = None
    epsilon: Optional[float] = None
    witnesses: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha={self.alpha} outside (0, 1]")
        if not self.C >= 0:
            raise ValueError("constant must be nonnegative")

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.flags.values())

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "C0": self.C0 if self.C0 is not None else self.C,
            "C1": self.C1,
            "rho0": self.rho0,
            "rho1": self.rho1,
            "epsilon": self.epsilon,
            "witnesses": self.witnesses,
            "pass": self.passed,
            "flags": {k: bool(v) for k, v in self.flags.items()},
            "window": list(self.window),
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def fit_power_law(rho, values, window) -> tuple[float, float]:
    """Least-squares slope and prefactor of ln(values) against ln(rho) inside ``window``."""
    rho = np.asarray(rho, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    inside = (rho >= lo) & (rho <= hi)
    if np.count_nonzero(inside) < 3:
        raise InsufficientSamples(f"only {np.count_nonzero(inside)} nodes in window [{lo}, {hi}]")
    keep = inside & (values > 0)
    if np.count_nonzero(keep) < 3:
        raise NonPositiveSamples("field is not positive on the fit window")
    slope, icpt = np.polyfit(np.log(rho[keep]), np.log(values[keep]), 1)
    return float(slope), float(math.exp(icpt))


def default_window(u: SpaceTimeField1D) -> tuple[float, float]:
    return 4.0 * float(u.grid.nodes[1]), 0.5


def layer_window(u: SpaceTimeField1D, t: float, horizon: float, width: float = 3.0) -> tuple[float, float]:
    """Default window with its lower end pushed past the drift boundary layer of width ~ sqrt(T - t).

    The lower end never passes half the upper end, so early times still get a window.
    """
    lo, hi = default_window(u)
    if math.isfinite(horizon):
        lo = max(lo, min(width * math.sqrt(max(horizon - t, 0.0)), 0.5 * hi))
    return lo, hi


def estimate_holder_at_axis(u: SpaceTimeField1D, t: float, window=None) -> tuple[float, float]:
    """Fit u(rho, t) ~ C rho^alpha near the axis; returns ``(alpha, C)``."""
    n = u.times.index_of(t)
    window = default_window(u) if window is None else tuple(window)
    if window[0] <= 0 or window[1] > 1.0 or window[0] >= window[1]:
        raise ValueError("window must lie inside (0, 1]")
    return fit_power_law(u.positions(n), u.values[n], window)


def discrete_gradient(u: SpaceTimeField1D) -> np.ndarray:
    """Centered differences inside, one-sided at the two ends, per time slice."""
    return np.gradient(np.asarray(u.values), u.grid.nodes, axis=1)


def _witness(u, k, j, value, what):
    return {"check": what, "t": float(u.times.nodes[k]), "rho": float(u.grid.nodes[j]), "value": float(value)}


def _tail_sup(grad: np.ndarray) -> np.ndarray:
    """S[j] = max over times and nodes j' >= j of grad."""
    col = grad.max(axis=0)
    return np.maximum.accumulate(col[::-1])[::-1]


def _rho_beyond_last(mask: np.ndarray, x: np.ndarray) -> float:
    """Smallest node after the last violating node (0 if no violation)."""
    bad = np.nonzero(mask.any(axis=0))[0]
    if bad.size == 0:
        return 0.0
    j = bad[-1] + 1
    return float(x[j]) if j < x.size else math.inf


def verify_lemma1(
    u: SpaceTimeField1D,
    K: float,
    T: float,
    epsilon: float = 0.1,
    fit_times=None,
    rho_ref: float = 1.0,
    raise_on_fail: bool = False,
) -> HolderReport:
    """Check the three half-line properties of the unit-slope solution.

    (a) u <= C0 (rho^alpha + rho) with alpha fitted at the last time node;
    the fit is repeated at ``fit_times`` (default T(1 - 1e-3) and the last
    node) and the relative spread of the exponents is reported.
    (b) discrete u_rho <= C1 beyond rho1, where C1 is the tail sup from
    ``rho_ref`` on and rho1 the first node whose tail sup is already <= C1.
    (c) u >= (1 - epsilon) rho for every rho >= rho0 at every time node.
    """
    x = u.grid.nodes
    ts = u.times.nodes
    vals = np.asarray(u.values)
    scale = float(np.max(np.abs(vals)))
    tol = 1e-6 * scale
    if fit_times is None:
        fit_times = (T - 1e-3 * T, ts[-1]) if math.isfinite(T) and ts[-1] > T - 1e-3 * T else (ts[-1],)
    fits = []
    for tf in fit_times:
        tn = float(ts[u.times.index_of(tf)])
        window = layer_window(u, tn, T if K > 0 else math.inf)
        a, c = estimate_holder_at_axis(u, tn, window)
        fits.append({"t": tn, "alpha": a, "C": c, "window": list(window)})
    alpha = min(max(fits[-1]["alpha"], 1e-12), 1.0)
    alphas = [f["alpha"] for f in fits]
    spread = (max(alphas) - min(alphas)) / min(alphas) if min(alphas) > 0 else math.inf

    witnesses = []
    pos = x > 0
    ratio = vals[:, pos] / (x[pos] ** alpha + x[pos])
    C0 = float(ratio.max())
    k, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    witnesses.append(_witness(u, k, np.nonzero(pos)[0][j], C0, "a:C0"))

    grad = discrete_gradient(u)
    S = _tail_sup(grad)
    jref = int(np.searchsorted(x, rho_ref))
    C1 = float(S[min(jref, x.size - 1)])
    rho1 = float(x[int(np.argmax(S <= C1 + tol))])
    k, j = np.unravel_index(int(np.argmax(grad)), grad.shape)
    witnesses.append(_witness(u, k, j, grad[k, j], "b:max_grad"))

    viol = vals < (1.0 - epsilon) * x[None, :] - tol
    rho0 = _rho_beyond_last(viol, x)
    if np.any(viol):
        gap = (1.0 - epsilon) * x[None, :] - vals
        k, j = np.unravel_index(int(np.argmax(np.where(x[None, :] >= rho0, gap, -np.inf))), gap.shape)
        witnesses.append(_witness(u, k, j, gap[k, j], "c:worst_beyond_rho0"))

    upper = x[None, :] + 2.0 * K * math.sqrt(T if math.isfinite(T) else 0.0)
    excess = float(np.max(vals - upper))
    flags = {
        "a_alpha_in_unit_interval": 0.0 < alpha <= 1.0,
        "a_alpha_stable": spread <= 0.2,
        "a_C0_finite": math.isfinite(C0),
        "b_C1_finite": math.isfinite(C1) and math.isfinite(rho1),
        "c_rho0_finite": math.isfinite(rho0),
        "upper_linear_bound": excess <= 1e-8,
    }
    report = HolderReport(
        alpha=alpha,
        C=C0,
        window=tuple(fits[-1]["window"]),
        residuals={"alpha_fits": fits, "alpha_spread": spread, "upper_excess": excess},
        flags=flags,
        C0=C0,
        C1=C1,
        rho0=rho0,
        rho1=rho1,
        epsilon=epsilon,
        witnesses=witnesses,
        extra={"alpha_fits": fits, "alpha_spread": spread},
    )
    if raise_on_fail and not report.passed:
        failed = [k for k, v in flags.items() if not v]
        raise PropertyFailed(f"lemma checks failed: {failed}", witnesses)
    return report


def verify_lemma2(
    u: SpaceTimeField1D,
    alpha0: float,
    epsilon: float = 0.1,
    delta: Optional[float] = None,
    alpha: Optional[float] = None,
    raise_on_fail: bool = False,
) -> HolderReport:
    """Check the bounds for a solution with data 0 <= u0 <= alpha0 rho.

    C0 (reported without the alpha0 factor) is the smallest constant with
    u <= C0 alpha0 (rho^alpha + rho) everywhere, u <= C0 alpha0 rho^alpha on
    rho <= 1 for t >= delta, and u_rho <= C0 alpha0 beyond rho0 for t >= delta.
    The gradient must also stay >= 0 there.
    """
    x = u.grid.nodes
    ts = u.times.nodes
    vals = np.asarray(u.values)
    T = u.times.horizon
    if delta is None:
        delta = 0.05 * math.sqrt(T) if math.isfinite(T) else 0.05
    late = ts >= delta
    if not np.any(late):
        raise InsufficientSamples("no time nodes beyond delta")
    tol = 1e-6 * alpha0 * max(1.0, float(np.max(np.abs(vals))) / alpha0)
    if alpha is None:
        tn = float(ts[-1])
        alpha, _ = estimate_holder_at_axis(u, tn, layer_window(u, tn, T))
    alpha = min(max(alpha, 1e-12), 1.0)

    pos = x > 0
    near = pos & (x <= 1.0)
    r_all = vals[:, pos] / (alpha0 * (x[pos] ** alpha + x[pos]))
    r_near = vals[late][:, near] / (alpha0 * x[near] ** alpha)

    viol = vals < (1.0 - epsilon) * alpha0 * x[None, :] - tol
    rho0 = _rho_beyond_last(viol, x)
    grad = discrete_gradient(u)
    band = x >= rho0
    gband = grad[late][:, band]
    r_grad = float(gband.max()) / alpha0 if gband.size else 0.0
    C0 = float(max(r_all.max(), r_near.max(), r_grad))
    gmin = float(gband.min()) if gband.size else 0.0

    witnesses = []
    k, j = np.unravel_index(int(np.argmax(r_all)), r_all.shape)
    witnesses.append(_witness(u, k, np.nonzero(pos)[0][j], r_all[k, j], "a:C0_global"))
    if gband.size:
        k, j = np.unravel_index(int(np.argmin(gband)), gband.shape)
        witnesses.append(_witness(u, np.nonzero(late)[0][k], np.nonzero(band)[0][j], gmin, "c:min_grad"))
    flags = {
        "a_C0_finite": math.isfinite(C0),
        "b_rho0_finite": math.isfinite(rho0),
        "c_gradient_nonnegative": gmin >= -tol,
        "c_gradient_bounded": r_grad <= C0 + 1e-12,
    }
    report = HolderReport(
        alpha=alpha,
        C=C0,
        window=(0.0, 1.0),
        residuals={"min_gradient": gmin, "C0_parts": [float(r_all.max()), float(r_near.max()), r_grad]},
        flags=flags,
        C0=C0,
        rho0=rho0,
        epsilon=epsilon,
        witnesses=witnesses,
        extra={"alpha0": alpha0, "C0_alpha0": C0 * alpha0, "delta": delta},
    )
    if raise_on_fail and not report.passed:
        failed = [k for k, v in flags.items() if not v]
        raise PropertyFailed(f"lemma checks failed: {failed}", witnesses)
    return report
