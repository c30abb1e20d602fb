"""Command-line front end.

    rvsm run     --config cfg.json [--set optimizer.beta=0.01 ...]
    rvsm sweep   --config cfg.json --grid grid.json [--set ...]
    rvsm certify [--quick]

Exit codes: 0 success, 2 a run did not reach its step tolerance, 1 any error.
``RVSM_WORKERS`` sets the number of processes a sweep may use (default 1).
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime
import io
import itertools
import json
import logging
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, certify, kernels
from .analysis import (
    check_annulus,
    check_monotone,
    check_preconditions,
    limit_residual,
    loglog_slope,
)
from .config import (
    ExperimentConfig,
    _line_of,
    apply_override,
    load_config,
    parse_overrides,
    read_config_text,
    resolve,
)
from .errors import InvalidConfig, NotConverged, RvsmError
from .optimizers import AdmmConfig, RvsmConfig, run_admm, run_gd, run_rvsm
from .population import estimate_lipschitz

log = logging.getLogger("rvsm")

TRAJECTORY_COLUMNS = ("t", "f", "penalty", "lagrangian", "theta", "norm_w", "gap_wu", "grad_norm", "nnz_u")

GRID_KEYS = ("k", "seed", "beta", "lambda", "lambda_over_beta")

SUMMARY_COLUMNS = (
    "cell", "method", "k", "seed", "beta", "lambda", "lambda_over_beta", "eta",
    "final_loss", "theta_bar", "err_to_truth", "nnz_u", "iterations", "reason",
    "lagrangian_ok", "angle_ok",
    "admm_final_loss", "admm_theta_bar", "admm_err_to_truth", "admm_nnz_u", "admm_iterations", "admm_reason",
    "beta_slope", "median_nnz_rvsm", "median_nnz_admm", "error",
)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    cols = [traj.t, traj.f, traj.penalty, traj.lagrangian, traj.theta, traj.norm_w,
            traj.gap_wu, traj.grad_norm, traj.nnz_u]
    for row in zip(*cols):
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def execute(cfg: ExperimentConfig):
    """Run the configured optimizer; returns the trajectory."""
    opt = cfg.optimizer
    if cfg.method == "rvsm":
        return run_rvsm(opt, cfg.spec)
    if cfg.method == "admm":
        return run_admm(opt, cfg.spec)
    return run_gd(opt.eta, cfg.w0, cfg.spec, opt.max_iters, opt.stop_tol)


def _precondition_cfg(cfg: ExperimentConfig) -> RvsmConfig:
    opt = cfg.optimizer
    return RvsmConfig(eta=opt.eta, beta=opt.beta, penalty=opt.penalty, max_iters=opt.max_iters,
                      stop_tol=opt.stop_tol, init=cfg.w0)


def analyse(cfg: ExperimentConfig, traj) -> tuple[dict, dict, bool]:
    """Precondition report, limit/trajectory report, and whether the run converged."""
    pre = check_preconditions(_precondition_cfg(cfg), cfg.spec, cfg.w0, cfg.L)
    pre_dict = pre.to_dict()
    pre_dict["method"] = cfg.method
    report: dict = {"method": cfg.method, "reason": traj.reason, "iterations": traj.n_steps,
                    "final_step_norm": traj.final_step_norm, "stop_tol": traj.stop_tol,
                    "converged": traj.converged}
    if cfg.analysis.get("monotone", True):
        for field in ("lagrangian", "angle"):
            m = check_monotone(traj, field)
            report[f"monotone_{field}"] = {"ok": m.ok, "first_violation": m.first_violation,
                                           "max_increase": m.max_increase}
    if cfg.analysis.get("annulus", True):
        try:
            a = check_annulus(traj, cfg.spec)
            report["annulus"] = {"T_measured": a.T_measured, "M_measured": a.M_measured}
        except RvsmError as exc:
            report["annulus"] = {"error": str(exc)}
    if cfg.analysis.get("limit", True) and cfg.method == "gd":
        report["limit"] = {"w_bar": traj.w_bar, "error_to_truth": float(np.linalg.norm(traj.w_bar - cfg.spec.w_star)),
                           "grad_f_norm": float(traj.grad_norm[-1]), "theta_bar": float(traj.theta[-1])}
        if not traj.converged:
            report["limit"] = {"error": "not_converged", "message": "gradient descent hit max_iters"}
            return pre_dict, report, False
    elif cfg.analysis.get("limit", True):
        try:
            lim = limit_residual(traj, cfg.spec, cfg.penalty, cfg.beta)
            report["limit"] = lim.to_dict()
            report["limit"]["theta_below_delta"] = lim.theta_bar < pre.delta
        except NotConverged as exc:
            report["limit"] = {"error": "not_converged", "message": str(exc)}
            return pre_dict, report, False
    return pre_dict, report, True


def _warn_preconditions(pre: dict) -> None:
    d = pre["details"]
    checks = (
        ("eta_ok", f"eta={d['eta']:.6g} exceeds 1/(beta+L)={d['eta_bound']:.6g}"),
        ("angle_ok", "initial point is antiparallel to w*"),
        ("k_ok", f"k={d['k']} < 2"),
        ("beta_ok", f"beta={d['beta']:.6g} exceeds its bound {d['beta_bound']:.6g}"),
        ("lambda_ratio_ok", f"lambda/beta={d['lambda_over_beta']:.6g} not below 1/sqrt(d)="
                            f"{d['lambda_over_beta_bound']:.6g}"),
    )
    for key, msg in checks:
        if not pre[key]:
            log.warning("precondition %s failed: %s (continuing)", key, msg)


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "backend": kernels.BACKEND,
        "lipschitz_bound": cfg.L,
        "lipschitz_M": cfg.lipschitz_M,
        "lipschitz_estimate": estimate_lipschitz(cfg.spec, cfg.lipschitz_M, n_pairs=2000, seed=0),
        "eta_bound_stated": 1.0 / (cfg.beta + cfg.L),
        "eta_bound_descent_lemma": 2.0 / (cfg.beta + cfg.L),
        "resolved": cfg.resolved_dict(),
    }


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, parse_overrides(args.set))
    except InvalidConfig as exc:
        log.error("%s: %s", args.config, exc)
        return 1
    try:
        traj = execute(cfg)
        pre, report, ok = analyse(cfg, traj)
    except RvsmError as exc:
        log.error("run failed: %s", exc)
        return 1
    _warn_preconditions(pre)
    os.makedirs(cfg.output_dir, exist_ok=True)
    _write(os.path.join(cfg.output_dir, "trajectory.csv"), trajectory_csv(traj))
    _write(os.path.join(cfg.output_dir, "preconditions.json"), dumps(pre))
    _write(os.path.join(cfg.output_dir, "limit_report.json"), dumps(report))
    _write(os.path.join(cfg.output_dir, "run_meta.json"), dumps(_meta(cfg)))
    log.info("%s: %d iterations (%s), f=%.6g, outputs in %s", cfg.method, traj.n_steps,
             traj.reason, traj.f[-1], cfg.output_dir)
    if not ok:
        log.error("run did not converge: %s", report["limit"]["message"])
        return 2
    return 0


# ---------------------------------------------------------------- sweep

def read_grid(path) -> tuple[list[dict], bool]:
    """Cartesian product of the grid file's lists, in a fixed coordinate order.

    Recognised keys are ``k``, ``seed``, ``beta``, ``lambda``,
    ``lambda_over_beta`` (lists) and ``paired`` (bool: also run ADMM per cell).
    """
    raw, text = read_config_text(path)
    paired = raw.pop("paired", False)
    if not isinstance(paired, bool):
        raise InvalidConfig("paired must be true or false")
    for key, values in raw.items():
        if key not in GRID_KEYS:
            raise InvalidConfig(f"unknown grid key {key!r}", _line_of(text, key))
        if not isinstance(values, list):
            raise InvalidConfig(f"grid key {key!r} must be a list", _line_of(text, key))
    if "lambda" in raw and "lambda_over_beta" in raw:
        raise InvalidConfig("grid may sweep lambda or lambda_over_beta, not both")
    axes = [(key, raw[key]) for key in GRID_KEYS if key in raw]
    if not axes or any(len(v) == 0 for _, v in axes):
        return [], paired
    cells = [dict(zip([k for k, _ in axes], combo)) for combo in itertools.product(*[v for _, v in axes])]
    return cells, paired


def cell_raw(base: dict, coords: dict) -> dict:
    raw = copy.deepcopy(base)
    for key, value in coords.items():
        if key == "seed":
            raw["seed"] = value
            raw["w_star_seed"] = None
            raw["init_seed"] = None
        elif key == "k":
            raw["k"] = value
        elif key == "beta":
            apply_override(raw, "optimizer.beta", value)
        elif key == "lambda":
            apply_override(raw, "penalty.lambda", value)
            apply_override(raw, "penalty.lambda_over_beta", None)
        elif key == "lambda_over_beta":
            apply_override(raw, "penalty.lambda_over_beta", value)
            apply_override(raw, "penalty.lambda", None)
    return raw


def _summarize(traj, spec) -> dict:
    return {
        "final_loss": float(traj.f[-1]),
        "theta_bar": float(traj.theta[-1]),
        "err_to_truth": float(np.linalg.norm(traj.w_bar - spec.w_star)),
        "nnz_u": int(traj.nnz_u[-1]),
        "iterations": traj.n_steps,
        "reason": traj.reason,
    }


def run_cell(job) -> dict:
    """Run one grid cell (and its ADMM twin when paired); writes the cell's own files."""
    index, base, coords, paired, out_dir = job
    row = {key: None for key in SUMMARY_COLUMNS}
    row.update(coords)
    row["cell"] = index
    cell_dir = os.path.join(out_dir, "cells", f"cell_{index:04d}")
    try:
        cfg = resolve(cell_raw(base, coords))
        row.update(k=cfg.spec.k, seed=cfg.raw["seed"], beta=cfg.beta, eta=cfg.eta,
                   method=cfg.method, **{"lambda": cfg.penalty.lam})
        row["lambda_over_beta"] = cfg.penalty.lam / cfg.beta
        traj = execute(cfg)
        row.update(_summarize(traj, cfg.spec))
        row["lagrangian_ok"] = check_monotone(traj, "lagrangian").ok
        row["angle_ok"] = check_monotone(traj, "angle").ok
        os.makedirs(cell_dir, exist_ok=True)
        _write(os.path.join(cell_dir, "trajectory.csv"), trajectory_csv(traj))
        if paired:
            opt = cfg.optimizer
            admm = run_admm(AdmmConfig(eta=opt.eta, beta=opt.beta, penalty=opt.penalty,
                                       max_iters=opt.max_iters, stop_tol=opt.stop_tol, init=cfg.w0), cfg.spec)
            for key, value in _summarize(admm, cfg.spec).items():
                row["admm_" + key] = value
            _write(os.path.join(cell_dir, "admm_trajectory.csv"), trajectory_csv(admm))
    except RvsmError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    os.makedirs(cell_dir, exist_ok=True)
    _write(os.path.join(cell_dir, "cell.json"), dumps(row))
    return row


def _aggregate(rows: list[dict], coords_of: list[dict]) -> dict:
    """Per-group beta slopes and the sparsity medians; fills the aggregate columns in place."""
    groups: dict = {}
    for row, coords in zip(rows, coords_of):
        if "beta" not in coords or row["error"]:
            continue
        key = tuple((k, coords[k]) for k in GRID_KEYS if k in coords and k != "beta")
        groups.setdefault(key, []).append(row)
    slopes = []
    for key, members in groups.items():
        betas = [r["beta"] for r in members]
        errs = [r["err_to_truth"] for r in members]
        slope = loglog_slope(betas, errs) if len(set(betas)) >= 2 else None
        for r in members:
            r["beta_slope"] = slope
        slopes.append({"group": dict(key), "betas": betas, "errors": errs, "slope": slope})
    ok_rows = [r for r in rows if not r["error"]]
    med_rvsm = statistics.median([r["nnz_u"] for r in ok_rows if r["method"] == "rvsm"]) \
        if any(r["method"] == "rvsm" for r in ok_rows) else None
    admm_vals = [r["admm_nnz_u"] for r in ok_rows if r["admm_nnz_u"] is not None]
    admm_vals += [r["nnz_u"] for r in ok_rows if r["method"] == "admm"]
    med_admm = statistics.median(admm_vals) if admm_vals else None
    for r in rows:
        r["median_nnz_rvsm"] = med_rvsm
        r["median_nnz_admm"] = med_admm
    return {"beta_slopes": slopes, "median_nnz_rvsm": med_rvsm, "median_nnz_admm": med_admm}


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def workers_from_env() -> int:
    raw = os.environ.get("RVSM_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring RVSM_WORKERS=%r (not an integer)", raw)
        return 1
    return max(1, n)


def cmd_sweep(args) -> int:
    try:
        raw, text = read_config_text(args.config)
        for key, value in parse_overrides(args.set):
            apply_override(raw, key, value)
        resolve(raw, text)
        cells, paired = read_grid(args.grid)
    except InvalidConfig as exc:
        log.error("%s", exc)
        return 1
    if not cells:
        log.error("grid %s is empty", args.grid)
        return 1
    out_dir = raw.get("output_dir", "out/run")
    jobs = [(i, raw, coords, paired, out_dir) for i, coords in enumerate(cells)]
    os.makedirs(out_dir, exist_ok=True)
    workers = workers_from_env()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, jobs))
    else:
        rows = [run_cell(job) for job in jobs]
    rows.sort(key=lambda r: r["cell"])
    agg = _aggregate(rows, cells)
    _write(os.path.join(out_dir, "summary.csv"), summary_csv(rows))
    _write(os.path.join(out_dir, "summary.json"), dumps({"columns": list(SUMMARY_COLUMNS), "rows": rows,
                                                         "paired": paired, **agg}))
    n_err = sum(1 for r in rows if r["error"])
    n_unconv = sum(1 for r in rows if not r["error"] and r["reason"] != "step_tol")
    log.info("sweep: %d cells, %d errors, %d hit max_iters; summary in %s", len(rows), n_err, n_unconv, out_dir)
    if n_err:
        return 1
    return 2 if n_unconv else 0


def cmd_certify(args) -> int:
    results = certify.run_all(quick=args.quick)
    print(certify.format_table(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvsm", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. optimizer.beta=0.01 (repeatable)")
    p_run.set_defaults(func=cmd_run)
    p_sweep = sub.add_parser("sweep", help="run a Cartesian parameter grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True)
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_sweep.set_defaults(func=cmd_sweep)
    p_cert = sub.add_parser("certify", help="check closed forms against independent oracles")
    p_cert.add_argument("--quick", action="store_true", help="smaller sample counts")
    p_cert.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
