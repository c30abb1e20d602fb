"""Closed-form population loss of the no-overlap ReLU network.

For Gaussian inputs the squared-error risk of a ``k``-patch network with
shared filter ``w`` and ground truth ``w*`` reduces to a function of
``|w|``, ``|w*|`` and the angle between them::

    f(w) = [a (|w|^2 + |w*|^2) - 2 k g(w, w*) - 2 b |w| |w*|] / k^2
    b = (k^2 - k) / (2 pi),   a = b + k / 2

where ``g`` is the ReLU correlation kernel (``g_closed``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    EPS_NORM,
    Rng,
    _angle_rows,
    angle,
    as_vector,
    check_same_length,
    make_rng,
    norm,
    sample_unit_sphere,
)
from .errors import DegenerateVector, InvalidRadius

PI = math.pi

SADDLE_LABEL = "saddle"
GLOBAL_MIN_LABEL = "global-min"
LOCAL_MAX_LABEL = "local-max"


@dataclass(frozen=True)
class ProblemSpec:
    """Ground truth filter and patch count of the teacher network."""

    w_star: np.ndarray
    k: int
    w_star_norm: float = field(init=False, repr=False)

    def __post_init__(self):
        w = as_vector(self.w_star, "w_star")
        w.setflags(write=False)
        object.__setattr__(self, "w_star", w)
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        n = norm(w)
        if n < EPS_NORM:
            raise DegenerateVector("w_star must be nonzero")
        object.__setattr__(self, "w_star_norm", n)

    @classmethod
    def random(cls, d: int, k: int, seed: int) -> "ProblemSpec":
        """Unit-norm ground truth drawn uniformly from the sphere."""
        return cls(sample_unit_sphere(d, make_rng(seed)), k)

    @property
    def d(self) -> int:
        return self.w_star.size

    @property
    def b(self) -> float:
        return (self.k * self.k - self.k) / (2.0 * PI)

    @property
    def a(self) -> float:
        return self.b + self.k / 2.0


def _corr(nu, nv, theta):
    return nu * nv * (np.sin(theta) + (PI - theta) * np.cos(theta)) / (2.0 * PI)


def g_closed(u, v) -> float:
    """E[relu(u.x) relu(v.x)] for standard Gaussian ``x``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    check_same_length(u, v)
    theta = angle(u, v)
    return float(_corr(norm(u), norm(v), theta))


def _row_norms(W):
    return np.sqrt(np.einsum("ij,ij->i", W, W))


def _loss_rows(W: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    k = spec.k
    ns = spec.w_star_norm
    nw = _row_norms(W)
    theta = _angle_rows(W, spec.w_star)
    g = _corr(nw, ns, theta)
    return (spec.a * (nw * nw + ns * ns) - 2.0 * k * g - 2.0 * spec.b * nw * ns) / (k * k)


def _grad_rows(W: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    k = spec.k
    ns = spec.w_star_norm
    nw = _row_norms(W)
    theta = _angle_rows(W, spec.w_star)
    kk = k * k - k
    ratio = ns / nw
    coef_w = k + kk / PI - (k / PI) * ratio * np.sin(theta) - (kk / PI) * ratio
    coef_s = (k / PI) * (PI - theta)
    return (coef_w[:, None] * W - coef_s[:, None] * spec.w_star[None, :]) / (k * k)


def _as_point(w, spec: ProblemSpec) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    check_same_length(w, spec.w_star)
    return w


def loss(w, spec: ProblemSpec) -> float:
    """Population loss ``f(w)``; nonnegative up to rounding."""
    return float(_loss_rows(_as_point(w, spec)[None, :], spec)[0])


def grad(w, spec: ProblemSpec) -> np.ndarray:
    """Gradient of ``f`` at a nonzero ``w``.

    ``f`` is not differentiable at the origin, so norms below ``EPS_NORM``
    raise ``DegenerateVector`` instead of returning a subgradient.
    """
    return _grad_rows(_as_point(w, spec)[None, :], spec)[0]


def finite_diff_grad(w, spec: ProblemSpec, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of ``loss`` with step ``h`` per coordinate."""
    w = _as_point(w, spec)
    if not norm(w) > 2.0 * h:
        raise DegenerateVector("finite differences need |w| > 2h")
    d = w.size
    E = np.eye(d) * h
    plus = _loss_rows(w[None, :] + E, spec)
    minus = _loss_rows(w[None, :] - E, spec)
    return (plus - minus) / (2.0 * h)


def saddle_point(spec: ProblemSpec) -> np.ndarray:
    k = spec.k
    return -((k * k - k) / (k * k + (PI - 1.0) * k)) * spec.w_star


def critical_points(spec: ProblemSpec) -> list[tuple[np.ndarray, str]]:
    """Critical points of ``f`` with their type.

    For ``k > 1``: the origin (local max, non-differentiable), ``w*`` and a
    degenerate saddle on the ray opposite ``w*``. For ``k = 1`` only ``w*``
    is a differentiable critical point.
    """
    w_star = np.array(spec.w_star)
    if spec.k == 1:
        return [(w_star, GLOBAL_MIN_LABEL)]
    return [
        (np.zeros_like(w_star), LOCAL_MAX_LABEL),
        (w_star, GLOBAL_MIN_LABEL),
        (saddle_point(spec), SADDLE_LABEL),
    ]


def lipschitz_bound(M: float, spec: ProblemSpec) -> float:
    """Gradient Lipschitz constant ``1 + 3|w*|/M`` on the coplanar region ``|w| >= M``."""
    if not M > 0:
        raise InvalidRadius(f"M must be positive, got {M}")
    return 1.0 + 3.0 * spec.w_star_norm / M


def sample_coplanar_pairs(spec: ProblemSpec, M: float, n: int, rng: Rng, r_max=None):
    """Random pairs on one half-plane bounded by the ``w*`` line, norms in [M, r_max]."""
    if not M > 0:
        raise InvalidRadius(f"M must be positive, got {M}")
    if r_max is None:
        r_max = 2.0 * spec.w_star_norm + M
    e1 = spec.w_star / spec.w_star_norm
    if spec.d == 1:
        raise ValueError("coplanar sampling needs d >= 2")
    g = rng.standard_normal(spec.d)
    g -= np.dot(g, e1) * e1
    e2 = g / norm(g)

    def draw():
        r = rng.uniform(M, r_max, n)
        phi = rng.uniform(0.0, PI, n)
        return (r * np.cos(phi))[:, None] * e1 + (r * np.sin(phi))[:, None] * e2

    return draw(), draw()


def estimate_lipschitz(spec: ProblemSpec, M: float, n_pairs: int = 10_000, seed: int = 0) -> float:
    """Largest observed ``|grad(w1) - grad(w2)| / |w1 - w2|`` over sampled coplanar pairs."""
    W1, W2 = sample_coplanar_pairs(spec, M, n_pairs, make_rng(seed))
    G1 = _grad_rows(W1, spec)
    G2 = _grad_rows(W2, spec)
    dw = _row_norms(W1 - W2)
    keep = dw > 1e-12
    ratios = _row_norms(G1 - G2)[keep] / dw[keep]
    return float(ratios.max())
