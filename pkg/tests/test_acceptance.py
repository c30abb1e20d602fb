"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and by ``python3 tests/test_acceptance.py``.
"""
import csv
import json
import math
import statistics
import sys
import time

import numpy as np
import pytest

from rvsm import certify, cli
from rvsm.analysis import (
    beta_error_scaling,
    check_annulus,
    check_monotone,
    check_preconditions,
    compliant_config,
    grad_norm_rate,
    limit_residual,
)
from rvsm.optimizers import RandomSphereInit, run_rvsm
from rvsm.penalties import PenaltyKind
from rvsm.population import ProblemSpec

RESULTS: dict = {}

D, K = 16, 4
N_SEEDS = 20
L_USED = 7.0
# lambda/beta per penalty: all well below 1/sqrt(d) = 0.25
RATIOS = {PenaltyKind.L1: 0.1, PenaltyKind.L0: 0.02, PenaltyKind.TL1: 0.1}


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return ok


_RUNS = {}


def compliant_runs(stop_tol=1e-12):
    """The 20 seeds x 3 penalties of criteria 4, 5 and 7 (cached per stop_tol)."""
    if stop_tol not in _RUNS:
        runs = []
        for kind, ratio in RATIOS.items():
            for s in range(N_SEEDS):
                spec = ProblemSpec.random(D, K, seed=1000 + s)
                cfg = compliant_config(spec, RandomSphereInit(2000 + s), kind, ratio, L=L_USED,
                                       max_iters=10_000, stop_tol=stop_tol, a=1.0)
                pre = check_preconditions(cfg, spec, cfg.init, L_USED)
                assert pre.all_ok, pre
                runs.append((kind, s, spec, cfg, pre, run_rvsm(cfg, spec)))
        _RUNS[stop_tol] = runs
    return _RUNS[stop_tol]


def test_criterion_01_closed_form_vs_monte_carlo():
    t0 = time.perf_counter()
    suites = certify.mc_suite(n_samples=100_000, n_instances=50, dims=(2, 4, 8), ks=(1, 2, 8))
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in suites) and elapsed <= 60
    detail = ", ".join(f"{r.name} {r.n_cases - r.n_failed}/{r.n_cases} max|z|={r.worst:.2f}" for r in suites)
    assert record(1, ok, f"{detail}; {elapsed:.1f}s (limit 60s)"), detail


def test_criterion_02_gradient_vs_finite_differences():
    t0 = time.perf_counter()
    r = certify.grad_suite(n_per=100, dims=(2, 8, 64), ks=(1, 2, 8))
    elapsed = time.perf_counter() - t0
    ok = r.passed and elapsed <= 10
    assert record(2, ok, f"{r.n_cases} cases, worst rel err {r.worst:.2e} (gate 1e-5), "
                         f"critical-point zeros checked; {elapsed:.2f}s (limit 10s)"), r.first_failure


def test_criterion_03_prox_vs_grid_oracle():
    t0 = time.perf_counter()
    suites = [certify.prox_suite(kind, n=1000) for kind in PenaltyKind]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in suites) and elapsed <= 30
    detail = ", ".join(f"{r.name} worst {r.worst:.1e}" for r in suites)
    assert record(3, ok, f"{detail} (gate 1e-4, 1000 scalars/kind incl. boundaries); "
                         f"{elapsed:.1f}s (limit 30s)"), [r.first_failure for r in suites]


def test_criterion_04_descent_of_lagrangian_and_angle():
    t0 = time.perf_counter()
    runs = compliant_runs()
    elapsed = time.perf_counter() - t0
    lag = [check_monotone(tr, "lagrangian") for *_, tr in runs]
    ang = [check_monotone(tr, "angle") for *_, tr in runs]
    lag_ok = sum(m.ok for m in lag)
    ang_ok = sum(m.ok for m in ang)
    worst_angle = max(m.max_increase for m in ang)
    ok = lag_ok == len(runs) and ang_ok == len(runs) and elapsed <= 120
    assert record(4, ok, f"lagrangian monotone {lag_ok}/{len(runs)} "
                         f"(max rise {max(m.max_increase for m in lag):.1e}); "
                         f"angle monotone {ang_ok}/{len(runs)} (max rise {worst_angle:.1e}, tol 1e-12); "
                         f"{elapsed:.1f}s"), "angle sequence rises on some compliant runs"


def test_criterion_05_limit_structure():
    failures = []
    worst_res, worst_fo, worst_c = 0.0, 0.0, 0.0
    for kind, s, spec, cfg, pre, traj in compliant_runs():
        rep = limit_residual(traj, spec, cfg.penalty, cfg.beta)
        fo_gate = max(1e-8, cfg.stop_tol / cfg.eta)
        bound_applies = 2 * spec.k * cfg.penalty.lam * math.sqrt(spec.d) < 1
        checks = {
            "theta": rep.theta_bar < pre.delta,
            "first-order": rep.grad_norm_at_limit <= fo_gate,
            "residual": rep.residual <= 1e-4 * spec.w_star_norm,
            "C": rep.C_in_interval if bound_applies else True,
            "signs": rep.signs_ok,
        }
        worst_res = max(worst_res, rep.residual)
        worst_fo = max(worst_fo, rep.grad_norm_at_limit)
        if bound_applies:
            worst_c = max(worst_c, rep.C / rep.C_upper)
        failures += [f"{kind.value}/{s}:{name}" for name, good in checks.items() if not good]
    assert record(5, not failures, f"60 runs; max limit-identity residual {worst_res:.1e}, "
                                   f"max first-order residual {worst_fo:.1e}, max C/C_upper {worst_c:.2f}"
                                   + (f"; failures {failures[:5]}" if failures else "")), failures


def test_criterion_06_error_scales_linearly_in_beta():
    t0 = time.perf_counter()
    spec = ProblemSpec.random(D, K, seed=7)
    base = compliant_config(spec, RandomSphereInit(8), "l1", 0.1, beta_fraction=1.0, L=L_USED,
                            max_iters=200_000)
    betas = base.beta * np.geomspace(1 / 64, 1, 6)
    res = beta_error_scaling(base, spec, betas)
    elapsed = time.perf_counter() - t0
    ok = res.slope >= 0.8 and elapsed <= 120
    errs = ", ".join(f"{e:.2e}" for e in res.errors)
    assert record(6, ok, f"slope {res.slope:.4f} (gate 0.8); errors [{errs}]; {elapsed:.1f}s"), res


def test_criterion_07_gradient_rate_envelope():
    results = [grad_norm_rate(tr, prefixes=(100, 1_000, 10_000), slack=0.10)
               for *_, tr in compliant_runs(stop_tol=0.0)]
    n_ok = sum(r.ok for r in results)
    assert record(7, n_ok == len(results), f"c/sqrt(T) envelope holds on {n_ok}/{len(results)} runs "
                                           f"at T in (1e2, 1e3, 1e4)"), n_ok


def test_criterion_08_rvsm_sparser_than_admm(tmp_path):
    base = {"seed": 0, "d": 64, "k": 8, "output_dir": str(tmp_path / "paired"), "L": L_USED,
            "optimizer": {"method": "rvsm", "beta_fraction": 0.5, "max_iters": 3000, "stop_tol": 1e-12},
            "penalty": {"kind": "l1", "lambda_over_beta": 0.05}}
    (tmp_path / "base.json").write_text(json.dumps(base))
    (tmp_path / "grid.json").write_text(json.dumps({"seed": list(range(20)), "paired": True}))
    code = cli.main(["-q", "sweep", "--config", str(tmp_path / "base.json"), "--grid", str(tmp_path / "grid.json")])
    with open(tmp_path / "paired" / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert code in (0, 2) and len(rows) == 20
    med_r, med_a = float(rows[0]["median_nnz_rvsm"]), float(rows[0]["median_nnz_admm"])
    loss_r = statistics.median(float(r["final_loss"]) for r in rows)
    loss_a = statistics.median(float(r["admm_final_loss"]) for r in rows)
    ratio = max(loss_r, loss_a) / min(loss_r, loss_a)
    ok = med_r <= med_a and ratio <= 2.0
    assert record(8, ok, f"median nnz RVSM {med_r:g} vs ADMM {med_a:g} (d=64); median final loss "
                         f"{loss_r:.2e} vs {loss_a:.2e} (ratio {ratio:.2f}, gate 2)"), rows[0]


def test_criterion_09_annulus_shrinks_with_k():
    ks = (2, 4, 8, 16)
    lines, ok = [], True
    for s in range(5):
        ms = []
        for k in ks:
            spec = ProblemSpec.random(D, k, seed=300 + s)
            cfg = compliant_config(spec, RandomSphereInit(400 + s), "l1", 0.1, L=L_USED)
            ms.append(check_annulus(run_rvsm(cfg, spec), spec).M_measured)
        inversions = sum(b > a for a, b in zip(ms, ms[1:]))
        ok &= inversions <= 1
        lines.append("/".join(f"{m:.3f}" for m in ms))
    assert record(9, ok, f"M over k=2,4,8,16 per seed: {'; '.join(lines)}"), lines


def test_criterion_10_run_is_deterministic(tmp_path):
    paths = []
    for name in ("a", "b"):
        cfg = {"seed": 5, "d": 16, "k": 4, "output_dir": str(tmp_path / name),
               "penalty": {"kind": "tl1", "lambda_over_beta": 0.1}}
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["-q", "run", "--config", str(path)]) == 0
        paths.append(tmp_path / name / "trajectory.csv")
    same = paths[0].read_bytes() == paths[1].read_bytes()
    assert record(10, same, f"two cmd_run invocations -> byte-identical trajectory CSV "
                            f"({paths[0].stat().st_size} bytes)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
