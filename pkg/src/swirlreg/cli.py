"""Command-line runner: ``swirlreg run <kind> ...`` and ``swirlreg sweep <kind> ...``.

Exit status: 0 when every criterion passes, 1 when some criterion fails,
2 for configuration errors.  Sweep cells run in a process pool whose size
comes from SWIRLREG_WORKERS (default: number of CPUs, capped by the cell count).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import parse_config
from .errors import ConfigInvalid, SwirlregError
from .experiments import KINDS, SCHEMAS, run_experiment, validate_params, write_artifacts

log = logging.getLogger("swirlreg")

WORKERS_ENV = "SWIRLREG_WORKERS"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def read_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid("config", f"cannot read {path}: {exc}") from None
    try:
        return parse_config(text)
    except ValueError as exc:
        raise ConfigInvalid("config", str(exc)) from None


def worker_count(n_cells: int) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return max(1, min(n_cells, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigInvalid(WORKERS_ENV, f"not an integer: {raw!r}") from None
    if n < 1:
        raise ConfigInvalid(WORKERS_ENV, "must be >= 1")
    return n


def _run_cell(kind: str, raw: dict, out_dir):
    res = run_experiment(kind, raw)
    if out_dir is not None:
        write_artifacts(res, out_dir)
    return res.verdict()


def _headline(kind: str) -> str:
    return {"exterior_measure": "c0", "lambda_chain": "picard_relative", "gamma_chain": "gamma_minus_lambda"}.get(kind, "error")


def observed_orders(values, errors) -> list:
    """log(e_i / e_{i+1}) / log(v_{i+1} / v_i) for consecutive cells (resolution-style axes)."""
    out = []
    for (v0, e0), (v1, e1) in zip(zip(values, errors), zip(values[1:], errors[1:])):
        if e0 and e1 and e0 > 0 and e1 > 0 and v0 > 0 and v1 > 0 and v1 != v0:
            out.append(math.log(e0 / e1) / math.log(v1 / v0))
        else:
            out.append(None)
    return out


def _trend(xs) -> str:
    d = np.diff(np.asarray(xs, dtype=float))
    if d.size == 0:
        return "single"
    if np.all(d < 0):
        return "decreasing"
    if np.all(d > 0):
        return "increasing"
    return "mixed"


def sweep(kind: str, base: dict, axis: str, values: list, out_dir=None) -> dict:
    """Run one cell per axis value concurrently and aggregate verdicts and the headline metric."""
    schema = SCHEMAS.get(kind)
    if schema is None:
        raise ConfigInvalid("kind", f"unknown experiment kind {kind!r}")
    names = {k.lower(): k for k in schema}
    if axis.lower() not in names:
        raise ConfigInvalid("axis", f"{axis!r} is not a parameter of {kind}")
    axis = names[axis.lower()]
    cells = []
    for v in values:
        raw = dict(base)
        raw[axis] = v
        validate_params(kind, raw)  # fail fast, before any solve starts
        cells.append(raw)
    dirs = [None if out_dir is None else os.path.join(out_dir, f"{axis}={v}".replace("/", "_")) for v in values]
    workers = worker_count(len(cells))
    results = []
    if workers == 1:
        for raw, d in zip(cells, dirs):
            try:
                results.append(_run_cell(kind, raw, d))
            except SwirlregError as exc:
                results.append({"pass": False, "exception": f"{type(exc).__name__}: {exc}"})
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_cell, kind, raw, d) for raw, d in zip(cells, dirs)]
            for fut in futures:
                try:
                    results.append(fut.result())
                except SwirlregError as exc:
                    results.append({"pass": False, "exception": f"{type(exc).__name__}: {exc}"})
    key = _headline(kind)
    parsed = [validate_params(kind, c)[axis] for c in cells]
    head = [r.get("metrics", {}).get(key) for r in results]
    rows = []
    for v, r, hval in zip(parsed, results, head):
        rows.append({"value": v, "pass": r["pass"], key: hval, "exception": r.get("exception")})
    report = {
        "kind": kind,
        "axis": axis,
        "cells": rows,
        "pass": all(r["pass"] for r in results),
        "partial_failure": any(not r["pass"] for r in results) and any(r["pass"] for r in results),
        "headline": key,
        "workers": workers,
    }
    if all(isinstance(h, (int, float)) for h in head) and len(head) > 1:
        report["trend"] = _trend(head)
        if all(isinstance(v, (int, float)) for v in parsed):
            report["observed_order"] = observed_orders(parsed, head)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "sweep.json"), "w") as fh:
            fh.write(json.dumps(report, indent=2, sort_keys=True))
        with open(os.path.join(out_dir, "sweep.csv"), "w", newline="\n") as fh:
            fh.write(f"{axis},pass,{key}\n")
            for row in rows:
                fh.write(f"{row['value']!r},{int(row['pass'])},{row[key]!r}\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swirlreg", description="Run regularity-verification experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("kind", choices=KINDS)
    r.add_argument("--config", help="plain-text key = value parameter file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one parameter")
    s = sub.add_parser("sweep", help="run one experiment across values of a parameter")
    s.add_argument("kind", choices=KINDS)
    s.add_argument("--axis", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--config")
    s.add_argument("--out", help="output directory (one subdirectory per cell)")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return p


def _overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigInvalid(item, "override must be KEY=VALUE")
        k, v = item.split("=", 1)
        out[k.strip().lower()] = v.strip()
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        raw = read_config(args.config)
        raw.update(_overrides(args.set))
        if args.command == "run":
            validate_params(args.kind, raw)
            res = run_experiment(args.kind, raw)
            names = write_artifacts(res, args.out)
            log.info("wrote %d files to %s", len(names), args.out)
            for c in res.criteria:
                print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value!r} limit={c.limit!r}")
            print(f"{'PASS' if res.passed else 'FAIL'} {args.kind} ({res.timings['total']:.2f} s) -> {args.out}")
            return EXIT_OK if res.passed else EXIT_FAIL
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if not values:
            raise ConfigInvalid("values", "empty list")
        report = sweep(args.kind, raw, args.axis, values, args.out)
        print(json.dumps(report, indent=2, sort_keys=True))
        return EXIT_OK if report["pass"] else EXIT_FAIL
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
