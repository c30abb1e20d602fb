"""Dense vector helpers, angle geometry and seeded sampling.

Vectors are plain 1-D ``float64`` numpy arrays. Random streams come from
``numpy.random.Generator`` backed by PCG64; normals use numpy's ziggurat
sampler, so a seed reproduces bit-exactly on a given numpy build.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateVector, NonFinite, ShapeMismatch

EPS_NORM = 1e-12

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def child_seeds(seed: int, n: int) -> list[int]:
    """Deterministic, statistically independent child seeds for parallel work."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(n)]


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    if v.size == 0:
        raise ShapeMismatch(f"{name} must have at least one entry")
    ensure_finite(v, name)
    return v


def ensure_finite(x, name: str = "value"):
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{name} has non-finite entries")
    return x


def check_same_length(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise ShapeMismatch(f"length mismatch: {u.shape} vs {v.shape}")


def norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.dot(v, v)))


def _angle_rows(W: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Angles between each row of ``W`` and ``v``.

    Uses ``2 atan2(|a - b|, |a + b|)`` on the normalized vectors, which equals
    ``arccos(<a, b>)`` but keeps full relative accuracy near 0 and pi where the
    arccos form loses about half the digits.
    """
    nw = np.sqrt(np.einsum("ij,ij->i", W, W))
    nv = math.sqrt(float(np.dot(v, v)))
    if np.any(nw < EPS_NORM) or nv < EPS_NORM:
        raise DegenerateVector("angle undefined for vectors with norm below 1e-12")
    A = W / nw[:, None]
    b = v / nv
    diff = A - b
    summ = A + b
    return 2.0 * np.arctan2(
        np.sqrt(np.einsum("ij,ij->i", diff, diff)),
        np.sqrt(np.einsum("ij,ij->i", summ, summ)),
    )


def angle(u, v) -> float:
    """Angle between ``u`` and ``v`` in ``[0, pi]``.

    Raises
    ------
    DegenerateVector
        If either norm is below ``EPS_NORM``.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    check_same_length(u, v)
    return float(_angle_rows(u[None, :], v)[0])


def sample_gaussian(n: int, rng: Rng) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return rng.standard_normal(n)


def sample_unit_sphere(d: int, rng: Rng) -> np.ndarray:
    """Uniform draw from the unit sphere in ``R^d`` (normalized Gaussian)."""
    if d < 1:
        raise ValueError("d must be positive")
    while True:
        g = rng.standard_normal(d)
        n = norm(g)
        if n > EPS_NORM:
            return g / n
