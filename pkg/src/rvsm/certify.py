"""Oracle certification suites: closed forms checked against independent references.

* prox maps against a dense grid search (one suite per penalty kind)
* the analytic gradient against central finite differences, plus exact zeros
  at the known critical points
* the closed-form kernel and loss against Monte-Carlo averages, gated at
  ``4`` standard errors so smaller sample counts widen the gate automatically

Seeds are fixed; a pristine build is expected to pass every suite.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import penalties
from .core import make_rng, sample_unit_sphere
from .empirical import empirical_g, empirical_loss
from .penalties import Penalty, PenaltyKind, prox_grid_oracle, prox_objective, tl1_threshold
from .population import ProblemSpec, finite_diff_grad, g_closed, grad, loss, saddle_point

PROX_ATOL = 1e-4
PROX_STEP = 1e-5
GRAD_RTOL = 1e-5
FD_STEP = 1e-6
ZERO_ATOL = 1e-9
MC_SIGMAS = 4.0

SEED_PROX = 11
SEED_GRAD = 12
SEED_MC = 13


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    n_cases: int
    n_failed: int
    worst: float
    gate: str
    seconds: float
    first_failure: str = ""


def _prox_cases(kind: PenaltyKind, n: int, rng) -> list[tuple[Penalty, float, float]]:
    """Random scalars plus inputs placed on and just either side of the zeroing threshold."""
    cases = []
    for i in range(n):
        lam = float(rng.uniform(0.01, 1.0))
        beta = float(rng.uniform(0.2, 3.0))
        a = float(rng.uniform(0.2, 3.0)) if kind is PenaltyKind.TL1 else 1.0
        p = Penalty(kind, lam, a)
        if kind is PenaltyKind.L1:
            tau = lam / beta
        elif kind is PenaltyKind.L0:
            tau = math.sqrt(2.0 * lam / beta)
        else:
            tau = tl1_threshold(lam, beta, a)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        r = i % 5
        if r == 0:
            w = tau
        elif r == 1:
            w = tau * (1.0 + 1e-6)
        elif r == 2:
            w = tau * (1.0 - 1e-6)
        else:
            w = float(rng.uniform(0.0, max(2.5 * tau, 1.0)))
        cases.append((p, beta, sign * w))
    return cases


def prox_suite(kind: PenaltyKind, n: int = 1000, seed: int = SEED_PROX) -> SuiteResult:
    t0 = time.perf_counter()
    rng = make_rng(seed + list(PenaltyKind).index(kind))
    worst, failed, first = 0.0, 0, ""
    cases = _prox_cases(kind, n, rng)
    for p, beta, w in cases:
        u = float(penalties.prox(p, np.array([w]), beta)[0])
        lo = min(0.0, w) - 0.05
        hi = max(0.0, w) + 0.05
        o = prox_grid_oracle(p, w, beta, lo=lo, hi=hi, step=PROX_STEP)
        err = abs(u - o)
        worse_obj = float(prox_objective(p, u, w, beta)) > float(prox_objective(p, o, w, beta)) + 1e-8
        worst = max(worst, err)
        if err > PROX_ATOL or worse_obj:
            failed += 1
            if not first:
                first = f"lam={p.lam:.6g} beta={beta:.6g} a={p.a:.6g} w={w:.17g}: prox={u:.10g} oracle={o:.10g}"
    return SuiteResult(f"prox-{kind.value}", failed == 0, len(cases), failed, worst,
                       f"|prox - oracle| <= {PROX_ATOL:g}", time.perf_counter() - t0, first)


def grad_suite(n_per: int = 100, seed: int = SEED_GRAD, dims=(2, 8, 64), ks=(1, 2, 8)) -> SuiteResult:
    t0 = time.perf_counter()
    rng = make_rng(seed)
    worst, failed, total, first = 0.0, 0, 0, ""
    for d in dims:
        for k in ks:
            spec = ProblemSpec(sample_unit_sphere(d, rng), k)
            for _ in range(n_per):
                w = rng.standard_normal(d)
                w *= rng.uniform(0.2, 2.0) / np.linalg.norm(w)
                g = grad(w, spec)
                fd = finite_diff_grad(w, spec, FD_STEP)
                rel = float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))
                total += 1
                worst = max(worst, rel)
                if rel > GRAD_RTOL:
                    failed += 1
                    first = first or f"d={d} k={k}: relative error {rel:.3g}"
    for k in (2, 4):
        spec = ProblemSpec(sample_unit_sphere(16, rng), k)
        for point, label in ((spec.w_star, "w*"), (saddle_point(spec), "saddle")):
            gn = float(np.linalg.norm(grad(point, spec)))
            total += 1
            if gn > ZERO_ATOL:
                failed += 1
                first = first or f"k={k}: |grad| at {label} = {gn:.3g}"
    return SuiteResult("grad-vs-fd", failed == 0, total, failed, worst,
                       f"rel err <= {GRAD_RTOL:g}; |grad| <= {ZERO_ATOL:g} at critical points",
                       time.perf_counter() - t0, first)


def mc_suite(n_samples: int = 100_000, n_instances: int = 50, seed: int = SEED_MC,
             dims=(2, 4, 8), ks=(1, 2, 8)) -> list[SuiteResult]:
    """Two suites: the correlation kernel and the full loss, each on ``n_instances`` draws."""
    out = []
    rng = make_rng(seed)
    for name in ("mc-kernel", "mc-loss"):
        t0 = time.perf_counter()
        worst, failed, first = 0.0, 0, ""
        for i in range(n_instances):
            d = dims[i % len(dims)]
            inst_seed = int(rng.integers(0, 2**62))
            if name == "mc-kernel":
                u = rng.standard_normal(d)
                v = rng.standard_normal(d)
                exact = g_closed(u, v)
                est = empirical_g(u, v, n_samples, inst_seed)
            else:
                k = ks[(i // len(dims)) % len(ks)]
                spec = ProblemSpec(sample_unit_sphere(d, rng), k)
                w = rng.standard_normal(d)
                exact = loss(w, spec)
                est = empirical_loss(w, spec, n_samples, inst_seed)
            z = abs(est.z_score(exact))
            worst = max(worst, z)
            if not est.agrees(exact, MC_SIGMAS):
                failed += 1
                first = first or f"instance {i}: exact={exact:.6g} mc={est.mean:.6g} z={z:.2f}"
        out.append(SuiteResult(name, failed == 0, n_instances, failed, worst,
                               f"|z| <= {MC_SIGMAS:g} at n={n_samples}", time.perf_counter() - t0, first))
    return out


def run_all(quick: bool = False) -> list[SuiteResult]:
    n_prox = 200 if quick else 1000
    n_grad = 10 if quick else 100
    n_mc = 1_000 if quick else 100_000
    results = [prox_suite(kind, n_prox) for kind in PenaltyKind]
    results.append(grad_suite(n_grad))
    results.extend(mc_suite(n_mc))
    return results


def format_table(results) -> str:
    rows = [("suite", "status", "cases", "failed", "worst", "gate", "time")]
    for r in results:
        rows.append((r.name, "PASS" if r.passed else "FAIL", str(r.n_cases), str(r.n_failed),
                     f"{r.worst:.3g}", r.gate, f"{r.seconds:.2f}s"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    for r in results:
        if r.first_failure:
            lines.append(f"  {r.name}: {r.first_failure}")
    return "\n".join(lines)
