"""Sparsity penalties and their exact thresholding (proximal) maps.

Every prox here minimizes ``lam * P(u) + (beta / 2) * (w - u)^2`` one
coordinate at a time. Ties between the zero candidate and a nonzero one are
resolved toward zero.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBeta, InvalidRange

# objectives within this relative gap count as a tie (resolved toward 0)
TIE_RTOL = 1e-12


class PenaltyKind(str, enum.Enum):
    L1 = "l1"
    L0 = "l0"
    TL1 = "tl1"


@dataclass(frozen=True)
class Penalty:
    kind: PenaltyKind
    lam: float
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"penalty weight must be finite and >= 0, got {self.lam}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"TL1 shape parameter must be > 0, got {self.a}")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]


_KIND_CODES = {PenaltyKind.L1: 0, PenaltyKind.L0: 1, PenaltyKind.TL1: 2}


def _elementwise(p: Penalty, u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    if p.kind is PenaltyKind.L1:
        return au
    if p.kind is PenaltyKind.L0:
        return (au != 0).astype(np.float64)
    return (p.a + 1.0) * au / (p.a + au)


def penalty_value(p: Penalty, u) -> float:
    """``lam * P(u)`` summed over coordinates."""
    u = np.asarray(u, dtype=np.float64)
    return float(p.lam * np.sum(_elementwise(p, u)))


def penalty_rows(p: Penalty, U: np.ndarray) -> np.ndarray:
    return p.lam * _elementwise(p, U).sum(axis=-1)


def prox_objective(p: Penalty, u, w, beta: float):
    u = np.asarray(u, dtype=np.float64)
    return p.lam * _elementwise(p, u) + 0.5 * beta * (np.asarray(w) - u) ** 2


def soft_threshold(w: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(w) * np.maximum(np.abs(w) - tau, 0.0)


def hard_threshold_level(lam: float, beta: float) -> float:
    """Magnitude above which the L0 prox keeps a coordinate: ``sqrt(2 lam / beta)``."""
    return math.sqrt(2.0 * lam / beta)


def tl1_threshold(lam: float, beta: float, a: float) -> float:
    """Smallest magnitude the TL1 prox maps to a nonzero value.

    Continuous regime (``lam/beta <= a^2 / (2(a+1))``): ``(lam/beta)(a+1)/a``;
    otherwise the map jumps at ``sqrt(2 (lam/beta)(a+1)) - a/2``.
    """
    r = lam / beta
    if r <= a * a / (2.0 * (a + 1.0)):
        return r * (a + 1.0) / a
    return math.sqrt(2.0 * r * (a + 1.0)) - a / 2.0


def _tl1_prox(w: np.ndarray, lam: float, beta: float, a: float) -> np.ndarray:
    # Stationary points of the one-sided objective solve the cubic
    # s^3 - (a + |w|) s^2 + c = 0 in s = a + |u|; the largest root is the
    # only interior local minimum and is compared against u = 0.
    x = np.abs(w)
    c = (lam / beta) * a * (a + 1.0)
    p = a + x
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 1.0 - 27.0 * c / (2.0 * p**3)
    real = q >= -1.0
    phi = np.arccos(np.clip(q, -1.0, 1.0))
    s = p / 3.0 + (2.0 * p / 3.0) * np.cos(phi / 3.0)
    u = np.clip(s - a, 0.0, x)
    obj_u = lam * (a + 1.0) * u / (a + u) + 0.5 * beta * (x - u) ** 2
    obj_0 = 0.5 * beta * x * x
    keep = real & (u > 0) & (obj_u < obj_0 * (1.0 - TIE_RTOL))
    return np.where(keep, np.copysign(u, w), 0.0)


def prox(p: Penalty, w, beta: float) -> np.ndarray:
    """Exact componentwise minimizer of ``lam P(u) + (beta/2)|w - u|^2``.

    Parameters
    ----------
    p : Penalty
    w : array_like
        Point to threshold.
    beta : float
        Coupling weight, must be positive.

    Returns
    -------
    numpy.ndarray
        Soft threshold at ``lam/beta`` for L1, hard threshold at
        ``sqrt(2 lam/beta)`` for L0 (equality maps to zero), and the
        closed-form cubic-root map for TL1.
    """
    if not beta > 0:
        raise InvalidBeta(f"beta must be positive, got {beta}")
    w = np.asarray(w, dtype=np.float64)
    if p.lam == 0.0:
        return w.copy()
    if p.kind is PenaltyKind.L1:
        return soft_threshold(w, p.lam / beta)
    if p.kind is PenaltyKind.L0:
        tau = hard_threshold_level(p.lam, beta)
        return np.where(np.abs(w) > tau, w, 0.0)
    return _tl1_prox(w, p.lam, beta, p.a)


def _scalar_obj(p: Penalty, u: np.ndarray, w: float, beta: float) -> np.ndarray:
    return p.lam * _elementwise(p, u) + 0.5 * beta * (w - u) ** 2


def _ternary(fun, lo: float, hi: float, iters: int = 100) -> float:
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if fun(m1) <= fun(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def prox_grid_oracle(p: Penalty, w_scalar: float, beta: float, lo: float | None = None,
                     hi: float | None = None, step: float = 1e-5) -> float:
    """Brute-force scalar prox: dense grid search plus a local ternary refinement.

    The grid always contains 0 (where every penalty is non-smooth). The best
    nonzero grid point is refined by ternary search inside its neighbouring
    cells, then compared against 0; near-equal objectives go to the smaller
    magnitude. Default bracket is ``[-|w| - 1, |w| + 1]``.
    """
    if not beta > 0:
        raise InvalidBeta(f"beta must be positive, got {beta}")
    w = float(w_scalar)
    if lo is None:
        lo = -abs(w) - 1.0
    if hi is None:
        hi = abs(w) + 1.0
    if not (lo < hi) or not step > 0:
        raise InvalidRange(f"need lo < hi and step > 0, got [{lo}, {hi}] step {step}")
    n = int(math.floor((hi - lo) / step)) + 1
    grid = lo + step * np.arange(n, dtype=np.float64)
    obj = _scalar_obj(p, grid, w, beta)
    nz = grid != 0.0
    f0 = float(_scalar_obj(p, np.array([0.0]), w, beta)[0])
    if lo <= 0.0 <= hi:
        best_u, best_f = 0.0, f0
    else:
        best_u, best_f = None, math.inf
    if np.any(nz):
        idx = np.flatnonzero(nz)[np.argmin(obj[nz])]
        g = float(grid[idx])
        a_lo = max(g - step, lo)
        a_hi = min(g + step, hi)
        # stay on one side of 0 so the search interval is smooth
        if g > 0:
            a_lo = max(a_lo, 0.0)
        else:
            a_hi = min(a_hi, 0.0)

        def f(t):
            return float(_scalar_obj(p, np.array([t]), w, beta)[0])

        r = _ternary(f, a_lo, a_hi)
        cand, fc = (r, f(r)) if f(r) <= obj[idx] else (g, float(obj[idx]))
        if cand == 0.0:
            fc = f0
        tol = TIE_RTOL * abs(best_f) if math.isfinite(best_f) else 0.0
        if best_u is None or fc < best_f - tol:
            best_u, best_f = cand, fc
        elif abs(fc - best_f) <= tol and abs(cand) < abs(best_u):
            best_u, best_f = cand, fc
    return float(best_u)
