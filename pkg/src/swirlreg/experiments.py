"""Named experiments with validated parameter blocks and pass/fail criteria.

Each experiment takes a parameter dict (already validated by
:func:`validate_params`) and returns an :class:`ExperimentResult` holding
criteria, witnesses, scalar metrics and artifact writers.  The CLI and the
acceptance tests both go through :func:`run_experiment`.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

import numpy as np
from scipy.integrate import quad

from .core import LN10, DriftProfile, Grid1D, InitialData1D, TimeGrid
from .drift1d import HalfLineProblem, solve_halfline, solve_robin
from .errors import ConfigInvalid
from .gamma2d import (
    GammaProblem,
    StripGrid,
    default_gamma0,
    make_velocity,
    solve_gamma,
    sup_bound_report,
    swirl_bound_report,
    verify_chain,
)
from .holder import verify_lemma1, verify_lemma2
from .lambda_modulus import (
    LambdaProblem,
    compare_f,
    ladder_report,
    picard_lambda_oracle,
    solve_lambda,
    solve_truncated_ladder,
    verify_monotonicity,
)
from .moving_frame import (
    DECREASING,
    INCREASING,
    MovingDomain,
    compare_with_halfline,
    exterior_fraction_reference,
    exterior_scan,
    solve_moving_domain,
    verify_proposition_holder,
)
from .sharpness import (
    CounterexampleSpec,
    build_eta,
    h_curve,
    h_inv2_integral,
    modulus_collapse_experiment,
    verify_subsolution,
)

KINDS = (
    "lemma1",
    "lemma2",
    "robin_consistency",
    "moving_oracle",
    "exterior_measure",
    "lambda_chain",
    "gamma_chain",
    "proposition",
    "counterexample",
)


# ---------------------------------------------------------------------------
# parameter schemas
# ---------------------------------------------------------------------------


def _number(text: str) -> float:
    text = str(text).strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Param:
    kind: str  # "float", "int", "bool", "str"
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""
    choices: tuple = ()

    def parse(self, key: str, raw):
        try:
            if self.kind == "float":
                val = _number(raw)
                if not math.isfinite(val):
                    raise ValueError("not finite")
            elif self.kind == "int":
                f = _number(raw)
                if f != int(f):
                    raise ValueError("not an integer")
                val = int(f)
            elif self.kind == "bool":
                val = _bool(raw)
            else:
                val = str(raw).strip()
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigInvalid(key, f"cannot parse {raw!r} as {self.kind}: {exc}") from None
        if self.choices and val not in self.choices:
            raise ConfigInvalid(key, f"{val!r} not one of {list(self.choices)}")
        if self.check is not None and not self.check(val):
            raise ConfigInvalid(key, f"{val!r} violates {self.rule}")
        return val


_pos = dict(check=lambda v: v > 0, rule="> 0")
_nonneg = dict(check=lambda v: v >= 0, rule=">= 0")
_res = dict(check=lambda v: v >= 8, rule=">= 8")

_DRIFT = {"K": Param("float", 1.0, **_nonneg), "T": Param("float", 1.0, **_pos)}
_STEP = {
    "theta": Param("float", 1 / 64, check=lambda v: 0 < v < 1, rule="in (0, 1)"),
    "dt_max": Param("float", 1 / 256, **_pos),
    "tau_min": Param("float", 1e-4, check=lambda v: 0 < v < 1, rule="in (0, 1) as a fraction of T"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "lemma1": {
        **_DRIFT,
        **_STEP,
        "epsilon": Param("float", 0.1, check=lambda v: 0 < v < 1, rule="in (0, 1)"),
        "resolution": Param("int", 256, **_res),
        "n_nodes": Param("int", 0, check=lambda v: v == 0 or v >= 3, rule="0 or >= 3"),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
        "t_end": Param("float", 0.0, **_nonneg),
    },
    "lemma2": {
        **_DRIFT,
        **_STEP,
        "alpha0": Param("float", 1.0, **_pos),
        "epsilon": Param("float", 0.1, check=lambda v: 0 < v < 1, rule="in (0, 1)"),
        "initial": Param("str", "two_alpha_linear", choices=("two_alpha_linear", "linear")),
        "resolution": Param("int", 256, **_res),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
    },
    "robin_consistency": {
        **_DRIFT,
        "resolution": Param("int", 256, **_res),
        "dt_max": Param("float", 1 / 512, **_pos),
        "t_end": Param("float", 0.9, **_pos),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
        "tolerance": Param("float", 1e-3, **_pos),
    },
    "moving_oracle": {
        **_DRIFT,
        "resolution": Param("int", 256, **_res),
        "t_end": Param("float", 0.9, **_pos),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
        "tolerance": Param("float", 1e-3, **_pos),
    },
    "exterior_measure": {
        **_DRIFT,
        "delta": Param("float", 0.05, check=lambda v: 0 < v < 0.5, rule="in (0, 0.5)"),
        "n_times": Param("int", 90, check=lambda v: v >= 2, rule=">= 2"),
        "quad_resolution": Param("int", 512, check=lambda v: v >= 16, rule=">= 16"),
        "c0_floor": Param("float", 0.01, **_nonneg),
    },
    "lambda_chain": {
        **_DRIFT,
        "alpha0": Param("float", 1.0, **_pos),
        "resolution": Param("int", 64, **_res),
        "dt_max": Param("float", 1 / 512, **_pos),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
        "picard": Param("bool", True),
        "ladder": Param("bool", True),
        "picard_t_end": Param("float", 0.5, **_pos),
    },
    "gamma_chain": {
        **_DRIFT,
        **_STEP,
        "alpha0": Param("float", 1.0, **_pos),
        "velocity": Param("str", "swirl_cell", choices=("swirl_cell", "random", "stationary", "zero")),
        "seed": Param("int", 42, **_nonneg),
        "resolution": Param("int", 32, **_res),
        "n3": Param("int", 64, check=lambda v: v >= 4, rule=">= 4"),
        "L": Param("float", 10.0, check=lambda v: v >= 10, rule=">= 10"),
        "L3": Param("float", 8.0, **_pos),
        "negative_control": Param("bool", True),
    },
    "proposition": {
        **_DRIFT,
        **_STEP,
        "delta": Param("float", 0.05, check=lambda v: 0 < v < 0.5, rule="in (0, 0.5)"),
        "rho0": Param("float", 1.0, **_pos),
        "resolution": Param("int", 64, **_res),
        "L": Param("float", 20.0, check=lambda v: v >= 10, rule=">= 10"),
        "slice_stride": Param("int", 4, check=lambda v: v >= 1, rule=">= 1"),
    },
    "counterexample": {
        "a": Param("float", 0.5 * math.pi**2, **_pos),
        "eta": Param("str", "cosine", choices=("cosine", "smooth")),
        "resolution": Param("int", 256, **_res),
        "theta": Param("float", 1 / 64, check=lambda v: 0 < v < 1, rule="in (0, 1)"),
        "dt_max": Param("float", 1 / 256, **_pos),
        "margin": Param("float", 0.9, check=lambda v: 0 < v <= 1, rule="in (0, 1]"),
        "contrast_level": Param("float", 0.05, **_pos),
    },
}


def validate_params(kind: str, raw: dict) -> dict:
    """Parse and check a raw key/value block; unknown keys and bad values raise ConfigInvalid."""
    if kind not in SCHEMAS:
        raise ConfigInvalid("kind", f"unknown experiment kind {kind!r}")
    schema = SCHEMAS[kind]
    lookup = {k.lower(): k for k in schema}
    out = {k: p.default for k, p in schema.items()}
    for key, value in raw.items():
        if key in ("kind", "name", "out"):
            continue
        name = lookup.get(key.lower())
        if name is None:
            raise ConfigInvalid(key, f"unknown parameter for {kind}")
        out[name] = schema[name].parse(name, value)
    return out


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class Criterion:
    name: str
    passed: bool
    value: Any = None
    limit: Any = None

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "value": self.value, "limit": self.limit}


@dataclass
class ExperimentResult:
    kind: str
    params: dict
    criteria: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def add(self, name: str, passed, value=None, limit=None) -> None:
        self.criteria.append(Criterion(name, bool(passed), _plain(value), _plain(limit)))

    def verdict(self) -> dict:
        return {
            "kind": self.kind,
            "params": _plain(self.params),
            "pass": self.passed,
            "criteria": [c.to_dict() for c in self.criteria],
            "witnesses": _plain(self.witnesses),
            "metrics": _plain(self.metrics),
            "timings": self.timings,
        }

    def verdict_json(self) -> str:
        return json.dumps(self.verdict(), indent=2, sort_keys=True)


def _plain(x):
    """Convert numpy scalars/arrays and tuples inside nested containers to JSON-friendly values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _write(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _drift(p) -> DriftProfile:
    return DriftProfile.zero(p["T"]) if p["K"] == 0 else DriftProfile.type_i(p["K"], p["T"])


def _field_artifacts(res: ExperimentResult, name: str, fld) -> None:
    res.artifacts[f"{name}.csv"] = lambda path, f=fld: f.thinned().to_csv(path)
    res.artifacts[f"{name}.npz"] = lambda path, f=fld: f.to_binary(path)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _lemma1(p, res):
    drift = _drift(p)
    T = p["T"]
    grid = Grid1D.uniform(p["L"], n_nodes=p["n_nodes"]) if p["n_nodes"] else Grid1D.uniform(p["L"], 1.0 / p["resolution"])
    times = TimeGrid.graded(T, p["theta"] * 1.0, p["dt_max"], p["tau_min"] * T, p["t_end"] or None)
    t0 = time.perf_counter()
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.linear(), grid, times))
    res.timings["solve"] = time.perf_counter() - t0
    x = grid.nodes
    A = np.asarray(drift.A(times.nodes))
    excess = float(np.max(np.asarray(u.values) - (x[None, :] + A[:, None])))
    res.add("comparison_bound", excess <= 1e-8, excess, 1e-8)
    res.metrics["comparison_excess"] = excess
    if p["K"] == 0:
        err = float(np.max(np.abs(np.asarray(u.values) - x[None, :])))
        res.add("linear_exactness", err < 1e-8, err, 1e-8)
        res.metrics["error"] = err
    t0 = time.perf_counter()
    rep = verify_lemma1(u, p["K"], T if p["K"] > 0 else math.inf, p["epsilon"])
    res.timings["verify"] = time.perf_counter() - t0
    d = rep.to_dict()
    values = {
        "a_alpha_in_unit_interval": (d["alpha"], [0, 1]),
        "a_alpha_stable": (d["alpha_spread"], 0.2),
        "a_C0_finite": (d["C0"], None),
        "b_C1_finite": ([d["C1"], d["rho1"]], None),
        "c_rho0_finite": (d["rho0"], None),
        "upper_linear_bound": (rep.residuals["upper_excess"], 1e-8),
    }
    for k, v in rep.flags.items():
        res.add(f"lemma1_{k}", v, *values.get(k, (None, None)))
    res.witnesses.extend(rep.witnesses)
    res.metrics.update({k: d[k] for k in ("alpha", "C0", "C1", "rho0", "rho1")})
    res.metrics["alpha_spread"] = d["alpha_spread"]
    res.artifacts["lemma1_report.json"] = lambda path, r=rep: _write(path, r.to_json())
    res.artifacts["alpha_fits.csv"] = lambda path, fits=d["alpha_fits"]: _write(
        path, _csv(["t", "alpha", "C", "window_lo", "window_hi"], [(f["t"], f["alpha"], f["C"], *f["window"]) for f in fits])
    )
    _field_artifacts(res, "u", u)


def _lemma2(p, res):
    drift = _drift(p)
    T = p["T"]
    grid = Grid1D.uniform(p["L"], 1.0 / p["resolution"])
    times = TimeGrid.graded(T, p["theta"], p["dt_max"], p["tau_min"] * T)
    init = InitialData1D.two_alpha_linear(p["alpha0"]) if p["initial"] == "two_alpha_linear" else InitialData1D.linear(p["alpha0"])
    t0 = time.perf_counter()
    u = solve_halfline(HalfLineProblem(drift, init, grid, times))
    res.timings["solve"] = time.perf_counter() - t0
    rep = verify_lemma2(u, init.far_slope, p["epsilon"])
    for k, v in rep.flags.items():
        res.add(f"lemma2_{k}", v)
    res.witnesses.extend(rep.witnesses)
    res.metrics.update(alpha=rep.alpha, C0=rep.C0, rho0=rep.rho0, C0_alpha0=rep.extra["C0_alpha0"])
    res.artifacts["lemma2_report.json"] = lambda path, r=rep: _write(path, r.to_json())
    _field_artifacts(res, "u", u)


def _robin(p, res):
    drift = _drift(p)
    h = 1.0 / p["resolution"]
    grid = Grid1D.uniform(p["L"], h)
    times = TimeGrid.graded(p["T"], h, p["dt_max"], t_end=p["t_end"])
    t0 = time.perf_counter()
    v, u_r = solve_robin(drift, grid, times)
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.linear(), grid, times))
    res.timings["solve"] = time.perf_counter() - t0
    gap = np.abs(np.asarray(u_r.values) - np.asarray(u.values))
    scale = float(np.max(np.abs(u.values)))
    k, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    rel = float(gap[k, j]) / scale
    res.add("robin_relative_gap", rel < p["tolerance"], rel, p["tolerance"])
    res.witnesses.append({"check": "robin_gap", "t": float(times.nodes[k]), "rho": float(grid.nodes[j]), "abs": float(gap[k, j])})
    res.metrics.update(error=rel, absolute_gap=float(gap[k, j]))
    rows = [(float(t), float(m)) for t, m in zip(times.nodes, gap.max(axis=1))]
    res.artifacts["gap_trace.csv"] = lambda path, rows=rows: _write(path, _csv(["t", "max_abs_gap"], rows))
    _field_artifacts(res, "v", v)


def _moving(p, res):
    drift = _drift(p)
    h = 1.0 / p["resolution"]
    times = TimeGrid.graded(p["T"], h, h / 4, t_end=p["t_end"])
    grid = Grid1D.uniform(p["L"], h)
    t0 = time.perf_counter()
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.linear(), grid, times))
    dom = MovingDomain(drift, INCREASING, p["L"] + float(drift.A(times.t_end)), times)
    nu = solve_moving_domain(dom, InitialData1D.linear(), h, times)
    res.timings["solve"] = time.perf_counter() - t0
    rel, ab, (tw, rw) = compare_with_halfline(u, nu, drift)
    res.add("moving_relative_gap", rel < p["tolerance"], rel, p["tolerance"])
    z = np.array([nu.positions(n) for n in range(nu.times.size)])
    above = float(np.max(np.asarray(nu.values) - np.maximum(z, 0.0)))
    below = float(np.min(nu.values))
    res.add("nu_between_0_and_z", below >= -1e-10 and above <= 1e-8, [below, above], [-1e-10, 1e-8])
    res.witnesses.append({"check": "moving_gap", "t": tw, "rho": rw, "abs": ab})
    res.metrics.update(error=rel, absolute_gap=ab)
    _field_artifacts(res, "nu", nu)


def _exterior(p, res):
    drift = _drift(p)
    T, delta = p["T"], p["delta"]
    t_values = np.maximum(T - np.geomspace(T - delta**2, 1e-4 * T, p["n_times"]), delta**2)
    radii = (delta / 4, delta / 2, delta)
    rows = []
    t0 = time.perf_counter()
    scans = {}
    for orient in (INCREASING, DECREASING):
        dom = MovingDomain(drift, orient)
        scans[orient] = exterior_scan(dom, t_values, radii, p["quad_resolution"])
        rows.extend((orient, *r) for r in scans[orient])
    res.timings["scan"] = time.perf_counter() - t0
    inc = np.array([r[2] for r in scans[INCREASING]])
    dec = np.array([r[2] for r in scans[DECREASING]])
    c0 = float(inc.min())
    res.add("increasing_c0", c0 > p["c0_floor"], c0, p["c0_floor"])
    res.add("decreasing_half_cube", float(dec.min()) >= 0.5 - 1e-6, float(dec.min()), 0.5 - 1e-6)
    worst = scans[INCREASING][int(np.argmin(inc))]
    ref = exterior_fraction_reference(MovingDomain(drift, INCREASING), worst[0], worst[1])
    res.add("quadrature_cross_check", abs(ref - worst[2]) < 1e-3, abs(ref - worst[2]), 1e-3)
    res.witnesses.append({"check": "c0", "t": worst[0], "r": worst[1], "fraction": worst[2], "reference": ref})
    res.metrics.update(c0=c0, decreasing_min=float(dec.min()), max_error_estimate=float(max(r[3] for r in scans[INCREASING])))
    res.artifacts["exterior_scan.csv"] = lambda path, rows=rows: _write(
        path, _csv(["orientation", "t", "r", "fraction", "error_estimate"], rows)
    )


def _lambda(p, res):
    drift = _drift(p)
    grid = Grid1D.cell_centered_grid(p["L"], 1.0 / p["resolution"])
    times = TimeGrid.graded(p["T"], dt_max=p["dt_max"])
    prob = LambdaProblem(drift, p["alpha0"], grid, times)
    t0 = time.perf_counter()
    lam = solve_lambda(prob)
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.two_alpha_linear(p["alpha0"]), grid, times))
    res.timings["solve"] = time.perf_counter() - t0
    mono = verify_monotonicity(lam)
    res.add("lambda_monotone", mono.passed, mono.min_gradient, -1e-6)
    res.witnesses.append({"check": "min_grad", **mono.to_dict()})
    exc = float(np.max(np.asarray(lam.values) - np.asarray(u.values)))
    res.add("lambda_below_u", exc <= 1e-6, exc, 1e-6)
    res.metrics.update(min_gradient=mono.min_gradient, lambda_minus_u=exc)
    if p["ladder"]:
        t0 = time.perf_counter()
        lad = solve_truncated_ladder(prob)
        rep = ladder_report(lad, lam)
        res.timings["ladder"] = time.perf_counter() - t0
        mz = min(rep["min_Z"].values())
        res.add("ladder_Z_nonnegative", mz >= -1e-8, mz, -1e-8)
        order = rep["order"]
        res.add("ladder_Z8_above_Z4", order["8-4"] >= -1e-6, order["8-4"], -1e-6)
        res.add("ladder_Z16_above_Z8", order["16-8"] >= -1e-6, order["16-8"], -1e-6)
        le = max(rep["lambda_excess"].values())
        res.add("ladder_below_lambda", le <= 1e-4, le, 1e-4)
        res.metrics["ladder"] = rep
    if p["picard"]:
        t0 = time.perf_counter()
        pic = picard_lambda_oracle(prob, t_end=p["picard_t_end"])
        rel, where = compare_f(pic.f, lam)
        res.timings["picard"] = time.perf_counter() - t0
        res.add("picard_agreement", rel < 1e-2, rel, 1e-2)
        res.witnesses.append({"check": "picard", "t": where[0], "r": where[1], "relative": rel})
        res.metrics.update(picard_relative=rel, picard_differences=[h[-1] for h in pic.differences])
        res.artifacts["picard_f.csv"] = lambda path, f=pic.f: f.thinned().to_csv(path)
    _field_artifacts(res, "lambda", lam)


def _gamma(p, res):
    drift = _drift(p)
    grid = StripGrid.default(p["L"], 1.0 / p["resolution"], p["n3"], p["L3"])
    times = TimeGrid.graded(p["T"], p["theta"], p["dt_max"], p["tau_min"] * p["T"])
    alpha0 = p["alpha0"]
    t0 = time.perf_counter()
    lam = solve_lambda(LambdaProblem(drift, alpha0, grid.r, times))
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.two_alpha_linear(alpha0), grid.r, times))
    l2 = verify_lemma2(u, 2.0 * alpha0)
    res.timings["lambda_u"] = time.perf_counter() - t0
    vparams = {"L3": p["L3"], "seed": p["seed"]}
    t0 = time.perf_counter()
    vel = make_velocity(p["velocity"], vparams, drift, grid, times)
    res.timings["certify"] = time.perf_counter() - t0
    res.add("velocity_lower_bound", vel.report["pass"], vel.report["min_vr_plus_g"], 0.0)
    res.add("divergence_free", vel.report["divergence_residual"] < 1e-8, vel.report["divergence_residual"], 1e-8)
    t0 = time.perf_counter()
    store = max(1, times.size // 4)
    G = solve_gamma(GammaProblem(vel, default_gamma0(alpha0), alpha0, grid, times), store_every=store)
    res.timings["solve"] = time.perf_counter() - t0
    sup = sup_bound_report(G)
    res.add("gamma_sup_bound", sup["pass"], sup["excess"], 1e-8)
    chain = verify_chain(G, lam, u)
    res.add("gamma_below_lambda", chain["gamma_minus_lambda"]["max"] <= 1e-4, chain["gamma_minus_lambda"]["max"], 1e-4)
    res.add("lambda_below_u", chain["lambda_minus_u"]["max"] <= 1e-4, chain["lambda_minus_u"]["max"], 1e-4)
    sw = swirl_bound_report(G, l2.alpha, l2.C0, 2.0 * alpha0, l2.extra["delta"])
    res.add("swirl_bound", sw["pass"], sw["min_margin"], 0.0)
    res.witnesses.extend([{"check": "chain", **chain}, {"check": "swirl", **sw}, {"check": "velocity", **vel.report}])
    res.metrics.update(
        gamma_minus_lambda=chain["gamma_minus_lambda"]["max"], sup_excess=sup["excess"], swirl_margin=sw["min_margin"],
        alpha=l2.alpha, C0=l2.C0,
    )
    if p["negative_control"]:
        t0 = time.perf_counter()
        bad = make_velocity("swirl_cell", {"L3": p["L3"], "amplitude": 3.0}, drift, certify=False)
        Gb = solve_gamma(GammaProblem(bad, default_gamma0(alpha0), alpha0, grid, times), store_every=times.size)
        cb = verify_chain(Gb, lam, u)
        res.timings["negative_control"] = time.perf_counter() - t0
        res.add("negative_control_breaks_chain", not cb["pass"], cb["gamma_minus_lambda"]["max"], 1e-4)
        res.metrics["negative_control_excess"] = cb["gamma_minus_lambda"]["max"]
    env_rows = [
        (float(G.times.nodes[k]), float(r), float(G.envelope[k, j]))
        for k in np.unique(np.linspace(0, times.size - 1, 33).astype(int))
        for j, r in enumerate(grid.r.nodes)
    ]
    res.artifacts["gamma_envelope.csv"] = lambda path, rows=env_rows: _write(path, _csv(["t", "r", "max_abs_gamma"], rows))
    res.artifacts["gamma_slices.csv"] = lambda path, g=G: g.to_csv(path)
    res.artifacts["gamma.npz"] = lambda path, g=G: g.to_binary(path)
    res.artifacts["velocity_certificate.json"] = lambda path, r=vel.report: _write(
        path, json.dumps(_plain(r), indent=2, sort_keys=True)
    )


def _proposition(p, res):
    drift = _drift(p).negated()
    T = p["T"]
    grid = Grid1D.uniform(p["L"], 1.0 / p["resolution"])
    times = TimeGrid.graded(T, p["theta"], p["dt_max"], p["tau_min"] * T)
    t0 = time.perf_counter()
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.linear(), grid, times))
    res.timings["solve"] = time.perf_counter() - t0
    keep = np.unique(np.append(np.arange(0, times.size, p["slice_stride"]), times.size - 1))
    sub = u.thinned(max_times=keep.size, max_nodes=grid.size) if p["slice_stride"] > 1 else u
    t0 = time.perf_counter()
    rep = verify_proposition_holder(sub, p["delta"], p["rho0"], drift)
    res.timings["verify"] = time.perf_counter() - t0
    res.add("holder_constant_finite", rep.passed, rep.C, None)
    res.add("alpha_in_unit_interval", 0 < rep.alpha <= 1, rep.alpha, [0, 1])
    excess = float(np.max(np.asarray(u.values) - grid.nodes[None, :]))
    res.add("below_linear_data", excess <= 1e-8, excess, 1e-8)
    res.metrics.update(alpha=rep.alpha, C=rep.C, max_excess_over_rho=excess)
    rows = list(zip(rep.residuals["times"], rep.residuals["ratio_by_slice"], rep.residuals["seminorm_by_slice"]))
    res.artifacts["holder_ratio.csv"] = lambda path, rows=rows: _write(path, _csv(["t", "ratio", "seminorm"], rows))


def _counterexample(p, res):
    spec = CounterexampleSpec(build_eta(p["a"], p["eta"]))
    t_checks = np.concatenate([np.linspace(0, 0.9, 10), 1 - np.geomspace(1e-1, 1e-6, 11)])
    qerr = 0.0
    for t in t_checks:
        q, _ = quad(lambda s: h_curve(s) ** -2, 0.0, float(t), epsabs=1e-14, epsrel=1e-13, limit=400)
        qerr = max(qerr, abs(q - float(h_inv2_integral(t))))
    res.add("integral_closed_form", qerr < 1e-8, qerr, 1e-8)
    full = float(h_inv2_integral(1.0))
    res.add("integral_full_time", abs(full - 1 / LN10) < 1e-15, full, 1 / LN10)
    sub = verify_subsolution(spec)
    res.add("subsolution_residual", sub["pass"], sub["min_residual"], -1e-8)
    h = 1.0 / p["resolution"]
    grid = Grid1D.uniform(10.0, h)
    times = TimeGrid.graded(1.0, theta=p["theta"], dt_max=p["dt_max"], tau_min=1e-4)
    t0 = time.perf_counter()
    rep = modulus_collapse_experiment(spec, grid, times, margin=p["margin"], contrast_level=p["contrast_level"])
    res.timings["collapse"] = time.perf_counter() - t0
    c = rep.certificate
    res.add("trace_above_threshold", rep.flags["trace_above_threshold"], c["inf_u_at_h"], c["threshold"])
    res.add("h_below_0.12", rep.flags["h_below_0.12"], c["h_end"], 0.12)
    res.add("u_dominates_phi", rep.flags["domination"], rep.domination["min_u_minus_phi"], -1e-6)
    res.add("contrast_monotone_tail", rep.flags["contrast_monotone_tail"], c["contrast_max_increase_tail"], 0.0)
    res.add("contrast_below_level", rep.flags["contrast_below_level"], c["contrast_end"], p["contrast_level"])
    res.witnesses.append({"check": "subsolution", **sub})
    res.witnesses.append({"check": "domination", **rep.domination})
    res.metrics.update(certificate=c)
    res.artifacts["trace.csv"] = lambda path, r=rep: r.to_csv(path)
    res.artifacts["collapse.json"] = lambda path, r=rep: _write(path, r.to_json())


_RUNNERS = {
    "lemma1": _lemma1,
    "lemma2": _lemma2,
    "robin_consistency": _robin,
    "moving_oracle": _moving,
    "exterior_measure": _exterior,
    "lambda_chain": _lambda,
    "gamma_chain": _gamma,
    "proposition": _proposition,
    "counterexample": _counterexample,
}


def run_experiment(kind: str, raw_params: Optional[dict] = None) -> ExperimentResult:
    """Validate ``raw_params`` for ``kind`` and run it."""
    params = validate_params(kind, raw_params or {})
    res = ExperimentResult(kind, params)
    t0 = time.perf_counter()
    _RUNNERS[kind](params, res)
    res.timings["total"] = time.perf_counter() - t0
    return res


def write_artifacts(res: ExperimentResult, out_dir) -> list:
    """Write the verdict and every artifact into ``out_dir``; returns the written file names."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    names = []
    for name in sorted(res.artifacts):
        res.artifacts[name](os.path.join(out_dir, name))
        names.append(name)
    with open(os.path.join(out_dir, "verdict.json"), "w") as fh:
        fh.write(res.verdict_json())
    names.append("verdict.json")
    return names
