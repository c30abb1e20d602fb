"""RVSM, gradient-step ADMM and plain gradient descent on the population loss.

All three loops run through ``rvsm.kernels.advance`` (compiled when
available) and return an immutable :class:`Trajectory` holding every iterate
plus per-iteration diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels
from .core import EPS_NORM, _angle_rows, as_vector, make_rng, sample_unit_sphere
from .errors import DegenerateVector, NonFinite
from .penalties import Penalty, penalty_rows, penalty_value, prox
from .population import ProblemSpec, _grad_rows, _loss_rows, grad, loss

PREVIOUS_W = "previous_w"
CURRENT_W = "current_w"
_CHUNK = 4096


@dataclass(frozen=True)
class RandomSphereInit:
    """Initial point ``scale * s`` with ``s`` uniform on the unit sphere."""

    seed: int
    scale: float = 1.0


Init = Union[np.ndarray, RandomSphereInit]


def initial_point(init: Init, d: int) -> np.ndarray:
    if isinstance(init, RandomSphereInit):
        if not init.scale > 0:
            raise ValueError("init scale must be positive")
        return init.scale * sample_unit_sphere(d, make_rng(init.seed))
    w0 = as_vector(init, "init")
    if w0.size != d:
        raise ValueError(f"init has length {w0.size}, problem dimension is {d}")
    return w0


def _check_common(eta, beta, max_iters, stop_tol):
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if int(max_iters) != max_iters or max_iters < 1:
        raise ValueError(f"max_iters must be an integer >= 1, got {max_iters}")
    if not stop_tol >= 0:
        raise ValueError(f"stop_tol must be >= 0, got {stop_tol}")


@dataclass(frozen=True)
class RvsmConfig:
    eta: float
    beta: float
    penalty: Penalty
    max_iters: int = 10_000
    stop_tol: float = 1e-12
    init: Init = field(default_factory=lambda: RandomSphereInit(0))
    u_update_source: str = PREVIOUS_W

    def __post_init__(self):
        _check_common(self.eta, self.beta, self.max_iters, self.stop_tol)
        if self.u_update_source not in (PREVIOUS_W, CURRENT_W):
            raise ValueError(f"u_update_source must be {PREVIOUS_W!r} or {CURRENT_W!r}")


@dataclass(frozen=True)
class AdmmConfig:
    eta: float
    beta: float
    penalty: Penalty
    max_iters: int = 10_000
    stop_tol: float = 1e-12
    init: Init = field(default_factory=lambda: RandomSphereInit(0))
    w_update: str = "gradient_step"

    def __post_init__(self):
        _check_common(self.eta, self.beta, self.max_iters, self.stop_tol)
        if self.w_update != "gradient_step":
            raise NotImplementedError(
                "only the gradient-step w-update is supported; the exact argmin needs f in closed form"
            )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Every iterate of one run plus derived per-iteration diagnostics.

    Row ``t`` of each array describes iterate ``t``; row 0 is the
    initialization. ``reason`` is ``"step_tol"`` when the run stopped on
    ``|w^{t+1} - w^t| <= stop_tol`` and ``"max_iters"`` otherwise.
    """

    method: str
    w: np.ndarray
    u: np.ndarray
    f: np.ndarray
    penalty: np.ndarray
    lagrangian: np.ndarray
    theta: np.ndarray
    norm_w: np.ndarray
    gap_wu: np.ndarray
    grad_norm: np.ndarray
    nnz_u: np.ndarray
    reason: str
    final_step_norm: float
    stop_tol: float
    eta: float
    beta: float
    z: Optional[np.ndarray] = None
    z_norm: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("w", "u", "f", "penalty", "lagrangian", "theta", "norm_w",
                     "gap_wu", "grad_norm", "nnz_u", "z", "z_norm"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return self.w.shape[0]

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self))

    @property
    def n_steps(self) -> int:
        return len(self) - 1

    @property
    def w_bar(self) -> np.ndarray:
        return self.w[-1]

    @property
    def u_bar(self) -> np.ndarray:
        return self.u[-1]

    @property
    def converged(self) -> bool:
        return self.reason == "step_tol" or self.final_step_norm <= self.stop_tol

    @classmethod
    def from_iterates(cls, method, W, U, spec: ProblemSpec, penalty: Optional[Penalty],
                      beta: float, *, Z=None, reason="max_iters", final_step_norm=math.nan,
                      stop_tol=0.0, eta=math.nan) -> "Trajectory":
        """Build a trajectory (diagnostics included) from stacked iterates."""
        W = np.ascontiguousarray(W, dtype=np.float64)
        U = np.ascontiguousarray(U, dtype=np.float64)
        f = _loss_rows(W, spec)
        G = _grad_rows(W, spec)
        D = W - U
        pen = penalty_rows(penalty, U) if penalty is not None else np.zeros(len(W))
        lag = f + pen + 0.5 * beta * np.einsum("ij,ij->i", D, D)
        G = G + beta * D
        z_norm = None
        if Z is not None:
            Z = np.ascontiguousarray(Z, dtype=np.float64)
            lag = lag + np.einsum("ij,ij->i", Z, D)
            G = G + Z
            z_norm = np.sqrt(np.einsum("ij,ij->i", Z, Z))
        traj = cls(
            method=method,
            w=W,
            u=U,
            f=f,
            penalty=pen,
            lagrangian=lag,
            theta=_angle_rows(W, spec.w_star),
            norm_w=np.sqrt(np.einsum("ij,ij->i", W, W)),
            gap_wu=np.sqrt(np.einsum("ij,ij->i", D, D)),
            grad_norm=np.sqrt(np.einsum("ij,ij->i", G, G)),
            nnz_u=np.count_nonzero(U, axis=1),
            reason=reason,
            final_step_norm=float(final_step_norm),
            stop_tol=float(stop_tol),
            eta=float(eta),
            beta=float(beta),
            z=Z,
            z_norm=z_norm,
        )
        for name in ("f", "penalty", "lagrangian", "theta", "grad_norm"):
            if not np.all(np.isfinite(getattr(traj, name))):
                raise NonFinite(f"trajectory field {name} is not finite")
        return traj


def lagrangian(w, u, p: Penalty, beta: float, spec: ProblemSpec) -> float:
    """Augmented Lagrangian ``f(w) + lam P(u) + (beta/2)|w - u|^2``."""
    w = np.asarray(w, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return loss(w, spec) + penalty_value(p, u) + 0.5 * beta * float(np.dot(w - u, w - u))


def admm_lagrangian(w, u, z, p: Penalty, beta: float, spec: ProblemSpec) -> float:
    z = np.asarray(z, dtype=np.float64)
    return lagrangian(w, u, p, beta, spec) + float(np.dot(z, np.asarray(w) - np.asarray(u)))


def auto_step_size(beta: float, L: float) -> float:
    """Largest step ``1/(beta + L)`` admitted by the descent theorem."""
    if beta < 0 or not L > 0:
        raise ValueError("need beta >= 0 and L > 0")
    return 1.0 / (beta + L)


def _rvsm_update(w, u, eta, beta, penalty, spec, source):
    w = np.asarray(w, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    w_new = w - eta * grad(w, spec) - eta * beta * (w - u)
    if not np.all(np.isfinite(w_new)):
        raise NonFinite("RVSM update produced non-finite values")
    u_new = prox(penalty, w_new if source == CURRENT_W else w, beta)
    return w_new, u_new


def rvsm_step(w, u, cfg: RvsmConfig, spec: ProblemSpec):
    """One RVSM iteration: gradient step on ``w``, thresholding step on ``u``.

    With ``u_update_source == "previous_w"`` the new ``u`` thresholds the old
    ``w`` (both updates read the same state); ``"current_w"`` thresholds the
    freshly updated ``w``.
    """
    return _rvsm_update(w, u, cfg.eta, cfg.beta, cfg.penalty, spec, cfg.u_update_source)


def _iterate(method, W0, U0, Z0, spec, eta, beta, penalty, max_iters, stop_tol,
             source_current=False, backend=None):
    advance = kernels.get_advance(backend)
    d = spec.d
    ws = np.ascontiguousarray(spec.w_star)
    lam = penalty.lam if penalty is not None else 0.0
    kind = penalty.code if penalty is not None else 0
    a = penalty.a if penalty is not None else 1.0
    chunks_w, chunks_u, chunks_z = [], [], []
    w, u = W0, U0
    z = Z0 if Z0 is not None else np.zeros(d)
    done = 0
    status = 0
    step = math.nan
    while done < max_iters:
        n = min(_CHUNK, max_iters - done)
        W = np.empty((n + 1, d))
        U = np.empty((n + 1, d))
        Z = np.empty((n + 1, d)) if method == kernels._pykernels.ADMM else np.empty((1, d))
        W[0], U[0], Z[0] = w, u, z
        row, status, step = advance(method, W, U, Z, 0, n, ws, spec.k, eta, beta, lam,
                                    kind, a, stop_tol, source_current)
        if status == 2:
            raise DegenerateVector(f"iterate {done + row} has norm below {EPS_NORM}")
        if status == 3:
            raise NonFinite(f"non-finite update at iteration {done + row + 1}",
                            iteration=done + row + 1)
        first = 1 if chunks_w else 0
        chunks_w.append(W[first:row + 1])
        chunks_u.append(U[first:row + 1])
        if method == kernels._pykernels.ADMM:
            chunks_z.append(Z[first:row + 1])
        done += row
        w, u, z = W[row].copy(), U[row].copy(), Z[row].copy() if len(Z) > row else z
        if status == 1:
            break
    reason = "step_tol" if status == 1 else "max_iters"
    Zs = np.concatenate(chunks_z) if chunks_z else None
    return np.concatenate(chunks_w), np.concatenate(chunks_u), Zs, reason, step


def run_rvsm(cfg: RvsmConfig, spec: ProblemSpec, backend=None) -> Trajectory:
    """Run RVSM from ``u^0 = prox(w^0)`` until the step tolerance or the budget."""
    w0 = initial_point(cfg.init, spec.d)
    u0 = prox(cfg.penalty, w0, cfg.beta)
    W, U, _, reason, step = _iterate(
        kernels._pykernels.RVSM, w0, u0, None, spec, cfg.eta, cfg.beta, cfg.penalty,
        cfg.max_iters, cfg.stop_tol, cfg.u_update_source == CURRENT_W, backend)
    return Trajectory.from_iterates("rvsm", W, U, spec, cfg.penalty, cfg.beta, reason=reason,
                                    final_step_norm=step, stop_tol=cfg.stop_tol, eta=cfg.eta)


def run_admm(cfg: AdmmConfig, spec: ProblemSpec, backend=None) -> Trajectory:
    """ADMM with a single gradient step replacing the exact ``w`` minimization.

    ``z^0 = 0`` and ``u^0 = prox(w^0)``; each iteration updates ``w`` by a
    gradient step on the multiplier Lagrangian, then ``u = prox(w + z/beta)``,
    then ``z += beta (w - u)``.
    """
    w0 = initial_point(cfg.init, spec.d)
    u0 = prox(cfg.penalty, w0, cfg.beta)
    W, U, Z, reason, step = _iterate(
        kernels._pykernels.ADMM, w0, u0, np.zeros(spec.d), spec, cfg.eta, cfg.beta,
        cfg.penalty, cfg.max_iters, cfg.stop_tol, False, backend)
    return Trajectory.from_iterates("admm", W, U, spec, cfg.penalty, cfg.beta, Z=Z,
                                    reason=reason, final_step_norm=step,
                                    stop_tol=cfg.stop_tol, eta=cfg.eta)


def run_gd(eta: float, init, spec: ProblemSpec, max_iters: int = 10_000,
           stop_tol: float = 1e-12, backend=None) -> Trajectory:
    """Plain gradient descent on ``f``; ``u`` mirrors ``w`` and the penalty is zero."""
    _check_common(eta, 1.0, max_iters, stop_tol)
    w0 = initial_point(init, spec.d)
    W, U, _, reason, step = _iterate(
        kernels._pykernels.GD, w0, w0.copy(), None, spec, eta, 0.0, None,
        max_iters, stop_tol, False, backend)
    return Trajectory.from_iterates("gd", W, U, spec, None, 0.0, reason=reason,
                                    final_step_norm=step, stop_tol=stop_tol, eta=eta)
