"""Monte-Carlo ground truth for the closed forms.

Samples are drawn in fixed-size chunks from one generator and folded into a
running mean/variance (Chan et al. pairwise merge), so ``n`` can be large
without holding every sample. Results are reproducible given
``(seed, chunk)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import check_same_length, make_rng
from .errors import ShapeMismatch
from .population import ProblemSpec

DEFAULT_CHUNK = 1 << 15


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int

    def z_score(self, target: float) -> float:
        """Signed distance to ``target`` in standard errors (inf if the error is 0 and they differ)."""
        diff = self.mean - target
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    def agrees(self, target: float, n_sigma: float = 4.0, abs_floor: float = 1e-14) -> bool:
        return abs(self.mean - target) <= n_sigma * self.std_error + abs_floor


class RunningStats:
    """Streaming mean and M2 accumulator that merges whole chunks at once."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push_chunk(self, x: np.ndarray) -> None:
        nb = x.size
        if nb == 0:
            return
        mb = float(x.mean())
        m2b = float(np.sum((x - mb) ** 2))
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * self.n * nb / n
        self.n = n

    def merge(self, other: "RunningStats") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 0 else math.inf


def net_output(x, w, k: int):
    """Average ReLU response of ``k`` disjoint contiguous patches.

    ``x`` may be a single input of length ``k*d`` or a batch of shape
    ``(m, k*d)``; a batch returns one output per row.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    d = w.size
    if x.shape[-1] != k * d:
        raise ShapeMismatch(f"input length {x.shape[-1]} != k*d = {k * d}")
    patches = x.reshape(x.shape[:-1] + (k, d))
    out = np.maximum(patches @ w, 0.0).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def _estimate(sample_fn, n: int, seed: int, chunk: int) -> McEstimate:
    if n < 2:
        raise ValueError("need at least 2 samples")
    rng = make_rng(seed)
    stats = RunningStats()
    left = n
    while left > 0:
        m = min(chunk, left)
        stats.push_chunk(sample_fn(rng, m))
        left -= m
    return McEstimate(stats.mean, stats.std_error, stats.n, seed)


def empirical_g(u, v, n: int, seed: int, chunk: int = DEFAULT_CHUNK) -> McEstimate:
    """Monte-Carlo estimate of ``E[relu(u.x) relu(v.x)]``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    check_same_length(u, v)
    d = u.size

    def draw(rng, m):
        X = rng.standard_normal((m, d))
        return np.maximum(X @ u, 0.0) * np.maximum(X @ v, 0.0)

    return _estimate(draw, n, seed, chunk)


def empirical_loss(w, spec: ProblemSpec, n: int, seed: int, chunk: int = DEFAULT_CHUNK) -> McEstimate:
    """Monte-Carlo estimate of the squared output mismatch against the teacher."""
    w = np.asarray(w, dtype=np.float64)
    check_same_length(w, spec.w_star)
    kd = spec.k * spec.d

    def draw(rng, m):
        X = rng.standard_normal((m, kd))
        diff = net_output(X, w, spec.k) - net_output(X, spec.w_star, spec.k)
        return diff * diff

    return _estimate(draw, n, seed, chunk)
