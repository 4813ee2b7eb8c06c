"""Shared building blocks: drift profiles, space/time grids, fields and initial data.

Everything here is immutable after construction.  Arrays handed out by the
dataclasses are flagged read-only so that fields can be shared freely between
solvers and threads.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import GridMismatch, HorizonExceeded, NonFiniteValue

LN10 = math.log(10.0)


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# drift profiles
# ---------------------------------------------------------------------------

DRIFT_KINDS = ("type_i", "log_supercritical", "constant", "zero", "tabulated")


@dataclass(frozen=True)
class DriftProfile:
    """Time-dependent scalar drift g(t) together with its primitive A(t).

    Use the constructors (:meth:`type_i`, :meth:`log_supercritical`, ...)
    rather than the raw initialiser.  ``scale`` multiplies both g and A and is
    how the opposite-sign drift of the backward problem is obtained
    (:meth:`negated`).
    """

    kind: str
    K: float = 0.0
    T: float = math.inf
    c: float = 0.0
    times: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if self.kind == "type_i" and not (self.K > 0 and 0 < self.T < math.inf):
            raise ValueError("type_i drift needs K > 0 and finite T > 0")
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise ValueError("tabulated drift needs matching 1-d times/values")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise ValueError("tabulated times must start at 0 and increase")
            cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (v[1:] + v[:-1]))])
            object.__setattr__(self, "times", _frozen(t))
            object.__setattr__(self, "values", _frozen(v))
            object.__setattr__(self, "_cum", _frozen(cum))

    # constructors -----------------------------------------------------------
    @classmethod
    def type_i(cls, K: float, T: float) -> "DriftProfile":
        """g(t) = K / sqrt(T - t)."""
        return cls("type_i", K=float(K), T=float(T))

    @classmethod
    def log_supercritical(cls) -> "DriftProfile":
        """g(t) = ln(10/(1-t)) / sqrt(1-t), blowing up at t = 1."""
        return cls("log_supercritical", T=1.0)

    @classmethod
    def constant(cls, c: float, horizon: float = math.inf) -> "DriftProfile":
        return cls("constant", c=float(c), T=float(horizon))

    @classmethod
    def zero(cls, horizon: float = math.inf) -> "DriftProfile":
        return cls("zero", T=float(horizon))

    @classmethod
    def tabulated(cls, times, values) -> "DriftProfile":
        t = np.asarray(times, dtype=float)
        return cls("tabulated", times=t, values=np.asarray(values, dtype=float), T=float(t[-1]))

    def negated(self) -> "DriftProfile":
        return replace(self, scale=-self.scale)

    # evaluation -------------------------------------------------------------
    @property
    def horizon(self) -> float:
        return self.T

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("drift evaluated at negative time")
        if np.any(t >= self.T):
            raise HorizonExceeded(f"t={np.max(t)!r} is not below the horizon {self.T!r}")
        return t

    def g(self, t):
        t = self._check(t)
        if self.kind == "type_i":
            out = self.K / np.sqrt(self.T - t)
        elif self.kind == "log_supercritical":
            w = 1.0 - t
            out = np.log(10.0 / w) / np.sqrt(w)
        elif self.kind == "constant":
            out = np.full_like(t, self.c)
        elif self.kind == "zero":
            out = np.zeros_like(t)
        else:
            out = np.interp(t, self.times, self.values)
        return self.scale * out

    def A(self, t):
        """Primitive of g from 0 to t (closed form where one exists)."""
        t = self._check(t)
        if self.kind == "type_i":
            out = 2.0 * self.K * (np.sqrt(self.T) - np.sqrt(self.T - t))
        elif self.kind == "log_supercritical":
            # substitute w = sqrt(1 - s)
            w = np.sqrt(1.0 - t)
            with np.errstate(divide="ignore", invalid="ignore"):
                wlogw = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0)
            out = 2.0 * ((LN10 + 2.0) - (w * LN10 - 2.0 * wlogw + 2.0 * w))
        elif self.kind == "constant":
            out = self.c * t
        elif self.kind == "zero":
            out = np.zeros_like(t)
        else:
            idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
            t0 = self.times[idx]
            gt = np.interp(t, self.times, self.values)
            out = self._cum[idx] + 0.5 * (t - t0) * (self.values[idx] + gt)
        return self.scale * out

    def mean_on(self, t0: float, t1: float) -> float:
        """Average of g over [t0, t1]; the per-step drift used by the implicit solvers."""
        if t1 <= t0:
            raise ValueError("empty interval")
        return float((self.A(t1) - self.A(t0)) / (t1 - t0))

    def to_config(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "type_i":
            d.update(K=self.K, T=self.T)
        elif self.kind == "constant":
            d.update(c=self.c)
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


def drift_eval(profile: DriftProfile, t: float) -> tuple[float, float]:
    """Return ``(g(t), A(t))``; raises :class:`HorizonExceeded` at or past the horizon."""
    return float(profile.g(t)), float(profile.A(t))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Radial nodes on [0, L].

    ``cell_centered`` grids hold the axis node 0, the cell centres
    (j + 1/2) h and one far node; they are what the radial (1/r) solvers use.
    """

    nodes: np.ndarray
    policy: str = "uniform"
    cell_centered: bool = False

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("grid needs at least three nodes")
        if x[0] != 0.0:
            raise ValueError("first node must be 0")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if x[-1] < 10.0:
            raise ValueError("truncation radius L must be at least 10")
        object.__setattr__(self, "nodes", _frozen(x))

    @classmethod
    def uniform(cls, L: float = 20.0, spacing: float | None = None, n_nodes: int | None = None) -> "Grid1D":
        if (spacing is None) == (n_nodes is None):
            raise ValueError("give exactly one of spacing / n_nodes")
        if spacing is not None:
            n = int(round(L / spacing))
            return cls(np.arange(n + 1) * spacing, "uniform")
        return cls(np.linspace(0.0, L, n_nodes), "uniform")

    @classmethod
    def graded(cls, L: float = 20.0, h_min: float = 1e-3, h_max: float = 1 / 32, ratio: float = 1.05) -> "Grid1D":
        """Spacing grows geometrically from ``h_min`` at the axis up to ``h_max``."""
        xs = [0.0]
        h = h_min
        while xs[-1] < L:
            xs.append(xs[-1] + h)
            h = min(h * ratio, h_max)
        xs[-1] = L
        if xs[-1] - xs[-2] < 0.5 * h_min:
            del xs[-2]
        return cls(np.array(xs), "graded")

    @classmethod
    def cell_centered_grid(cls, L: float = 20.0, spacing: float = 1 / 64) -> "Grid1D":
        n = int(round(L / spacing - 0.5))
        centers = (np.arange(n + 1) + 0.5) * spacing
        return cls(np.concatenate([[0.0], centers]), "cell_centered", cell_centered=True)

    @property
    def L(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    def same_as(self, other: "Grid1D") -> bool:
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True)
class TimeGrid:
    """Time nodes on [0, t_end] with t_end <= horizon - tau_min."""

    nodes: np.ndarray
    horizon: float = math.inf
    tau_min: float = 0.0
    theta: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must start at 0 and increase strictly")
        if t[-1] > self.horizon - self.tau_min + 1e-14 * max(1.0, abs(t[-1])):
            raise ValueError("time grid runs past horizon - tau_min")
        object.__setattr__(self, "nodes", _frozen(t))

    @classmethod
    def graded(
        cls,
        horizon: float,
        theta: float = 1 / 64,
        dt_max: float | None = None,
        tau_min: float | None = None,
        t_end: float | None = None,
    ) -> "TimeGrid":
        """t_{n+1} = t_n + min(theta (T - t_n), dt_max), stopping at t_end."""
        T = float(horizon)
        tau = 1e-4 * T if tau_min is None else float(tau_min)
        dt_max = T / 256 if dt_max is None else float(dt_max)
        end = T - tau if t_end is None else float(t_end)
        if end > T - tau + 1e-15:
            raise ValueError("t_end beyond horizon - tau_min")
        ts = [0.0]
        while ts[-1] < end:
            t = ts[-1]
            dt = min(theta * (T - t), dt_max)
            if t + dt >= end - 1e-3 * dt:
                ts.append(end)
                break
            ts.append(t + dt)
        return cls(np.array(ts), T, tau, theta)

    @classmethod
    def uniform(cls, t_end: float, n_steps: int, horizon: float = math.inf) -> "TimeGrid":
        return cls(np.linspace(0.0, t_end, n_steps + 1), horizon, 0.0, None)

    @property
    def t_end(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def index_of(self, t: float) -> int:
        """Index of the node closest to ``t``."""
        return int(np.argmin(np.abs(self.nodes - t)))

    def same_as(self, other: "TimeGrid") -> bool:
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeField1D:
    """Values indexed ``[time, node]``.

    ``shift`` (one entry per time node) moves the spatial grid per slice; it is
    used for fields expressed in the moving frame z = rho + A(t).
    """

    grid: Grid1D
    times: TimeGrid
    values: np.ndarray
    provenance: str = ""
    shift: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.times.size, self.grid.size):
            raise GridMismatch(f"values shape {v.shape} != ({self.times.size}, {self.grid.size})")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue(f"non-finite entries in field {self.provenance!r}")
        object.__setattr__(self, "values", _frozen(v))
        if self.shift is not None:
            s = np.asarray(self.shift, dtype=float)
            if s.shape != (self.times.size,):
                raise GridMismatch("shift must have one entry per time node")
            object.__setattr__(self, "shift", _frozen(s))

    def positions(self, n: int) -> np.ndarray:
        x = self.grid.nodes
        return x if self.shift is None else x + self.shift[n]

    def slice_at(self, t: float) -> tuple[float, np.ndarray]:
        n = self.times.index_of(t)
        return float(self.times.nodes[n]), self.values[n]

    def sample(self, x, n: int, method: str = "pchip"):
        """Interpolate slice ``n`` at positions ``x`` (in this field's own coordinate)."""
        pos = self.positions(n)
        if method == "linear":
            return np.interp(x, pos, self.values[n])
        return PchipInterpolator(pos, self.values[n], extrapolate=False)(x)

    def with_values(self, values, provenance: str | None = None) -> "SpaceTimeField1D":
        return replace(self, values=values, provenance=self.provenance if provenance is None else provenance)

    def truncated(self, t_max: float) -> "SpaceTimeField1D":
        """Restrict to time nodes <= t_max."""
        keep = self.times.nodes <= t_max + 1e-12
        tg = TimeGrid(self.times.nodes[keep], self.times.horizon, self.times.tau_min, self.times.theta)
        shift = None if self.shift is None else self.shift[keep]
        return replace(self, times=tg, values=self.values[keep], shift=shift)

    def thinned(self, max_times: int = 64, max_nodes: int = 1024) -> "SpaceTimeField1D":
        """Evenly strided subset of time nodes and grid nodes (first and last always kept)."""

        def pick(n, cap):
            if n <= cap:
                return np.arange(n)
            return np.unique(np.append(np.arange(0, n, -(-n // cap)), n - 1))

        it = pick(self.times.size, max_times)
        ix = pick(self.grid.size, max_nodes)
        grid = Grid1D(self.grid.nodes[ix], self.grid.policy, self.grid.cell_centered)
        tg = TimeGrid(self.times.nodes[it], self.times.horizon, self.times.tau_min, self.times.theta)
        shift = None if self.shift is None else self.shift[it]
        return replace(self, grid=grid, times=tg, values=self.values[np.ix_(it, ix)], shift=shift)

    def shares_grid(self, other: "SpaceTimeField1D") -> bool:
        return self.grid.same_as(other.grid) and self.times.same_as(other.times)

    # serialisation ----------------------------------------------------------
    def to_csv(self, path=None) -> str:
        """Columns t, rho, value in round-trip decimal; returns the text."""
        buf = io.StringIO()
        buf.write("t,rho,value\n")
        for n, t in enumerate(self.times.nodes):
            pos = self.positions(n)
            for x, v in zip(pos, self.values[n]):
                buf.write(f"{t!r},{float(x)!r},{float(v)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    def to_binary(self, path) -> str:
        """Write an ``.npz`` dump and return the SHA-256 of its payload."""
        shift = np.zeros(self.times.size) if self.shift is None else self.shift
        payload = {
            "nodes": np.asarray(self.grid.nodes),
            "times": np.asarray(self.times.nodes),
            "values": np.asarray(self.values),
            "shift": np.asarray(shift),
        }
        with open(path, "wb") as fh:
            np.savez(fh, **payload)
        return self.checksum()

    def checksum(self) -> str:
        h = hashlib.sha256()
        for arr in (self.grid.nodes, self.times.nodes, self.values):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        if self.shift is not None:
            h.update(np.ascontiguousarray(self.shift, dtype="<f8").tobytes())
        return h.hexdigest()

    @classmethod
    def from_binary(cls, path, provenance: str = "replay") -> "SpaceTimeField1D":
        with np.load(path) as data:
            grid = Grid1D(data["nodes"])
            times = TimeGrid(data["times"])
            shift = data["shift"]
            shift = None if not np.any(shift) else shift
            return cls(grid, times, data["values"], provenance, shift)


def field_from_function(grid: Grid1D, times: TimeGrid, fn: Callable, provenance: str = "function") -> SpaceTimeField1D:
    """Tabulate ``fn(rho_array, t)`` on a grid."""
    vals = np.array([fn(grid.nodes, t) for t in times.nodes], dtype=float)
    return SpaceTimeField1D(grid, times, vals, provenance)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def cosine_ramp(s):
    """Nonincreasing C^1 ramp: 1 for s <= 0, (1 + cos(pi s))/2 on (0, 1), 0 for s >= 1."""
    s = np.asarray(s, dtype=float)
    return np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, 0.5 * (1.0 + np.cos(np.pi * np.clip(s, 0, 1)))))


def cosine_ramp_derivative(s, order: int = 1):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    sc = np.clip(s, 0, 1)
    if order == 1:
        d = -0.5 * np.pi * np.sin(np.pi * sc)
    elif order == 2:
        d = -0.5 * np.pi**2 * np.cos(np.pi * sc)
    else:
        raise ValueError("order must be 1 or 2")
    return np.where(inside, d, 0.0)


def _lambda_zero_unit(r):
    """alpha0 = 1 profile: r^2, cubic Hermite bridge on (1/2, 1), r."""
    r = np.asarray(r, dtype=float)
    s = (r - 0.5) / 0.5
    bridge = 0.25 + 0.5 * s + 0.75 * s**2 - 0.5 * s**3
    return np.where(r <= 0.5, r * r, np.where(r >= 1.0, r, bridge))


def _lambda_zero_unit_prime(r):
    r = np.asarray(r, dtype=float)
    s = (r - 0.5) / 0.5
    bridge = 1.0 + 3.0 * s - 3.0 * s**2
    return np.where(r <= 0.5, 2.0 * r, np.where(r >= 1.0, 1.0, bridge))


INITIAL_KINDS = ("linear", "two_alpha_linear", "lambda_zero", "eta_bump", "tabulated")


@dataclass(frozen=True)
class InitialData1D:
    kind: str
    alpha0: float = 1.0
    fn: Optional[Callable] = field(default=None, compare=False)
    dfn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "tabulated" and self.fn is None:
            raise ValueError("tabulated initial data needs fn")

    @classmethod
    def linear(cls, alpha0: float = 1.0) -> "InitialData1D":
        return cls("linear", float(alpha0))

    @classmethod
    def two_alpha_linear(cls, alpha0: float = 1.0) -> "InitialData1D":
        return cls("two_alpha_linear", float(alpha0))

    @classmethod
    def eta_bump(cls) -> "InitialData1D":
        return cls("eta_bump", 1.0)

    @classmethod
    def tabulated(cls, fn: Callable, slope: float = 0.0, dfn: Callable | None = None) -> "InitialData1D":
        return cls("tabulated", float(slope), fn, dfn)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        a = self.alpha0
        if self.kind == "linear":
            return a * rho
        if self.kind == "two_alpha_linear":
            return 2.0 * a * rho
        if self.kind == "lambda_zero":
            return a * _lambda_zero_unit(rho)
        if self.kind == "eta_bump":
            return cosine_ramp(1.0 - rho / LN10)
        return np.asarray(self.fn(rho), dtype=float)

    def derivative(self, rho):
        rho = np.asarray(rho, dtype=float)
        a = self.alpha0
        if self.kind == "linear":
            return np.full_like(rho, a)
        if self.kind == "two_alpha_linear":
            return np.full_like(rho, 2.0 * a)
        if self.kind == "lambda_zero":
            return a * _lambda_zero_unit_prime(rho)
        if self.kind == "eta_bump":
            return -cosine_ramp_derivative(1.0 - rho / LN10) / LN10
        if self.dfn is None:
            raise NotImplementedError("tabulated data without derivative")
        return np.asarray(self.dfn(rho), dtype=float)

    @property
    def far_slope(self) -> float:
        """Slope of the linear far field used by the comparison boundary condition."""
        if self.kind == "two_alpha_linear":
            return 2.0 * self.alpha0
        if self.kind == "eta_bump":
            return 0.0
        return self.alpha0


def make_lambda_zero(alpha0: float) -> InitialData1D:
    """Initial modulus: alpha0 r^2 near the axis, alpha0 r beyond 1, monotone Hermite bridge between.

    The bridge matches value and slope at both ends; its slope stays in
    [alpha0, 1.75 alpha0], inside the admissible band (0, 2 alpha0].
    """
    if not alpha0 > 0:
        raise ValueError("alpha0 must be positive")
    data = InitialData1D("lambda_zero", float(alpha0))
    r = np.linspace(0.5, 1.0, 2001)
    d = data.derivative(r)
    assert np.all(d > 0) and np.all(d <= 2 * alpha0 * (1 + 1e-12))
    return data


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys are lower-cased."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.lower()] = value
    return out
