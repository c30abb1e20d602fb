"""Time the compiled inner loop against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--iters 2000] [--repeat 3]

Both backends run the same RVSM / ADMM / GD loops with step tolerance 0, so
a run only stops early on an exactly repeated iterate (which can happen at
slightly different iterations, since the last bits of rounding differ). The
table reports the best time per iteration for each backend, the speed-up, and
the largest iterate difference over the common prefix.
"""
import argparse
import timeit

import numpy as np

from rvsm import kernels
from rvsm.analysis import compliant_config
from rvsm.optimizers import AdmmConfig, RandomSphereInit, run_admm, run_gd, run_rvsm
from rvsm.population import ProblemSpec

CASES = [
    ("rvsm", "l1", 16, 4),
    ("rvsm", "l0", 16, 4),
    ("rvsm", "tl1", 16, 4),
    ("rvsm", "l1", 64, 8),
    ("admm", "l1", 64, 8),
    ("gd", None, 64, 8),
]


def make_runner(method, kind, d, k, iters):
    spec = ProblemSpec.random(d, k, seed=1)
    cfg = compliant_config(spec, RandomSphereInit(2), kind or "l1", 0.05, max_iters=iters, stop_tol=0.0)
    if method == "rvsm":
        return lambda backend: run_rvsm(cfg, spec, backend=backend)
    if method == "admm":
        acfg = AdmmConfig(eta=cfg.eta, beta=cfg.beta, penalty=cfg.penalty, max_iters=iters,
                          stop_tol=0.0, init=cfg.init)
        return lambda backend: run_admm(acfg, spec, backend=backend)
    return lambda backend: run_gd(cfg.eta, cfg.init, spec, iters, 0.0, backend=backend)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not kernels.compiled_available():
        print("compiled kernel not built; only the numpy backend is available")
        return
    print(f"{'case':<20}{'py [us/it]':>12}{'cy [us/it]':>12}{'speed-up':>10}{'max |dw|':>12}")
    for method, kind, d, k in CASES:
        run = make_runner(method, kind, d, k, args.iters)
        per_iter = {}
        trajs = {}
        for backend in ("python", "cython"):
            trajs[backend] = run(backend)
            best = min(timeit.repeat(lambda: run(backend), number=1, repeat=args.repeat))
            per_iter[backend] = best / max(trajs[backend].n_steps, 1)
        n = min(len(trajs["python"]), len(trajs["cython"]))
        diff = float(np.max(np.abs(trajs["python"].w[:n] - trajs["cython"].w[:n])))
        label = f"{method}/{kind or '-'} d={d} k={k}"
        print(f"{label:<20}{per_iter['python'] * 1e6:>12.2f}{per_iter['cython'] * 1e6:>12.2f}"
              f"{per_iter['python'] / per_iter['cython']:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
