"""Checkers for the convergence claims, run against recorded trajectories.

Every checker is read-only: it takes an immutable :class:`Trajectory` (or a
plain sequence where noted) and returns a report object.
"""
from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Sequence

import numpy as np

from .core import EPS_NORM, angle
from .errors import AnnulusViolation, NotConverged
from .optimizers import RvsmConfig, Trajectory, initial_point, run_rvsm
from .penalties import Penalty, prox
from .population import PI, ProblemSpec, grad, lipschitz_bound

MONOTONE_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class PreconditionReport:
    eta_ok: bool
    angle_ok: bool
    k_ok: bool
    beta_ok: bool
    lambda_ratio_ok: bool
    delta: float
    L_used: float
    details: dict

    @property
    def all_ok(self) -> bool:
        return self.eta_ok and self.angle_ok and self.k_ok and self.beta_ok and self.lambda_ratio_ok

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["all_ok"] = self.all_ok
        return out


def beta_upper_bound(delta: float, k: int) -> float:
    """``delta sin(delta) / (k pi)``."""
    return delta * math.sin(delta) / (k * PI)


def check_preconditions(cfg: RvsmConfig, spec: ProblemSpec, w0, L: float) -> PreconditionReport:
    """Evaluate the hypotheses of the convergence guarantee for one configuration.

    ``delta`` is not an input: it is taken as ``pi - theta(w0, w*)``, the
    largest value for which the initial-angle hypothesis holds. Report only,
    never raises on a failed check.
    """
    w0 = np.asarray(w0, dtype=np.float64)
    theta0 = angle(w0, spec.w_star)
    delta = PI - theta0
    beta_bound = beta_upper_bound(delta, spec.k)
    eta_bound = 1.0 / (cfg.beta + L)
    ratio = cfg.penalty.lam / cfg.beta
    ratio_bound = 1.0 / math.sqrt(spec.d)
    details = {
        "theta0": theta0,
        "eta": cfg.eta,
        "eta_bound": eta_bound,
        # the sufficient-decrease argument itself only needs eta <= 2/(beta + L)
        "eta_bound_descent_lemma": 2.0 / (cfg.beta + L),
        "eta_descent_lemma_ok": cfg.eta <= 2.0 / (cfg.beta + L),
        "beta": cfg.beta,
        "beta_bound": beta_bound,
        "lambda_over_beta": ratio,
        "lambda_over_beta_bound": ratio_bound,
        "k": spec.k,
        "d": spec.d,
    }
    return PreconditionReport(
        eta_ok=cfg.eta <= eta_bound,
        angle_ok=delta > 0,
        k_ok=spec.k >= 2,
        beta_ok=cfg.beta <= beta_bound,
        lambda_ratio_ok=ratio < ratio_bound,
        delta=delta,
        L_used=L,
        details=details,
    )


class MonotoneResult(NamedTuple):
    ok: bool
    first_violation: int | None
    max_increase: float


def check_monotone(traj, field: str = "lagrangian", tol: float = MONOTONE_TOL) -> MonotoneResult:
    """Check that a recorded sequence never increases by more than ``tol``.

    ``traj`` is a :class:`Trajectory` (``field`` is ``"lagrangian"`` or
    ``"angle"``) or any 1-D sequence of numbers.
    """
    if isinstance(traj, Trajectory):
        attr = {"lagrangian": "lagrangian", "angle": "theta", "theta": "theta"}.get(field, field)
        seq = getattr(traj, attr)
    else:
        seq = traj
    x = np.asarray(seq, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty sequence")
    if x.size == 1:
        return MonotoneResult(True, None, 0.0)
    inc = np.diff(x)
    bad = np.flatnonzero(inc > tol)
    first = int(bad[0]) + 1 if bad.size else None
    return MonotoneResult(first is None, first, float(max(inc.max(), 0.0)))


class AnnulusResult(NamedTuple):
    T_measured: int
    M_measured: float


def check_annulus(traj: Trajectory, spec: ProblemSpec) -> AnnulusResult:
    """Measure the band ``|w^t| in [|w*| - M, |w*| + M]`` that holds for all ``t >= T``.

    ``M`` is the smallest tail supremum of ``||w^t| - |w*||`` and ``T`` the
    first index whose tail attains it (within 1e-12 relative slack).

    Raises
    ------
    AnnulusViolation
        If some iterate collapses to the origin, or no tail stays inside the
        open band of half-width ``|w*|``.
    """
    norms = np.asarray(traj.norm_w, dtype=np.float64)
    if norms.size == 0:
        raise ValueError("empty trajectory")
    if np.any(norms < EPS_NORM):
        raise AnnulusViolation(f"iterate {int(np.argmax(norms < EPS_NORM))} collapsed to the origin")
    dev = np.abs(norms - spec.w_star_norm)
    tail_sup = np.maximum.accumulate(dev[::-1])[::-1]
    M = float(tail_sup.min())
    if not M < spec.w_star_norm:
        raise AnnulusViolation(f"iterate norms leave every band narrower than |w*| (M={M:.3g})")
    slack = 1e-12 * max(spec.w_star_norm, 1.0)
    T = int(np.argmax(tail_sup <= M + slack))
    return AnnulusResult(T, M)


@dataclasses.dataclass(frozen=True)
class LimitReport:
    w_bar: np.ndarray
    u_bar: np.ndarray
    theta_bar: float
    C: float
    residual: float
    grad_norm_at_limit: float
    grad_f_norm: float
    error_to_truth: float
    C_upper: float
    signs_ok: bool

    @property
    def C_in_interval(self) -> bool:
        """``C`` inside ``(0, 1/(1 - 2 k lam sqrt(d)))``; vacuous (True if C > 0) when the bound is undefined."""
        return self.C > 0 and (math.isinf(self.C_upper) or self.C < self.C_upper)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["w_bar"] = self.w_bar.tolist()
        out["u_bar"] = self.u_bar.tolist()
        out["C_in_interval"] = self.C_in_interval
        return out


def limit_residual(traj: Trajectory, spec: ProblemSpec, p: Penalty, beta: float) -> LimitReport:
    """Check the limit-point identity ``w* = (k pi/(pi - theta)) beta (w - T(w)) + C w``.

    ``T`` is the penalty's threshold map, ``w`` the final iterate, and ``C`` is
    fitted by scalar least squares. Also reports the first-order residual
    ``|grad f(w) + beta (w - T(w))|``.

    Raises
    ------
    NotConverged
        If the run exhausted its budget with the last step above ``stop_tol``.
    """
    if not traj.converged:
        raise NotConverged(
            f"run stopped at max_iters with step {traj.final_step_norm:.3g} > stop_tol {traj.stop_tol:.3g}"
        )
    w_bar = np.array(traj.w_bar)
    u_bar = prox(p, w_bar, beta)
    theta = angle(w_bar, spec.w_star)
    k = spec.k
    gap = w_bar - u_bar
    target = spec.w_star - (k * PI / (PI - theta)) * beta * gap
    C = float(np.dot(target, w_bar) / np.dot(w_bar, w_bar))
    residual = float(np.linalg.norm(target - C * w_bar))
    g = grad(w_bar, spec)
    denom = 1.0 - 2.0 * k * p.lam * math.sqrt(spec.d)
    C_upper = 1.0 / denom if denom > 0 else math.inf
    sg = np.sign(gap)
    signs_ok = bool(np.all((sg == 0) | (sg == np.sign(w_bar))))
    return LimitReport(
        w_bar=w_bar,
        u_bar=u_bar,
        theta_bar=theta,
        C=C,
        residual=residual,
        grad_norm_at_limit=float(np.linalg.norm(g + beta * gap)),
        grad_f_norm=float(np.linalg.norm(g)),
        error_to_truth=float(np.linalg.norm(w_bar - spec.w_star)),
        C_upper=C_upper,
        signs_ok=signs_ok,
    )


class ScalingResult(NamedTuple):
    slope: float
    betas: list
    errors: list


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2 or np.unique(xs).size < 2:
        raise ValueError("slope needs at least two distinct abscissae")
    if np.any(ys <= 0):
        return math.nan
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def beta_error_scaling(base_cfg: RvsmConfig, spec: ProblemSpec, betas: Sequence[float],
                       backend=None) -> ScalingResult:
    """Fit the log-log slope of ``|w_bar - w*|`` against ``beta`` at fixed ``lam/beta``.

    The step size of ``base_cfg`` is reused for every ``beta``, so it must
    already satisfy the step condition for the largest one.
    """
    betas = [float(b) for b in betas]
    if len(set(betas)) < 2:
        raise ValueError("need at least two distinct beta values")
    ratio = base_cfg.penalty.lam / base_cfg.beta
    errors = []
    for b in betas:
        cfg = dataclasses.replace(base_cfg, beta=b,
                                  penalty=dataclasses.replace(base_cfg.penalty, lam=ratio * b))
        traj = run_rvsm(cfg, spec, backend=backend)
        if not traj.converged:
            raise NotConverged(f"beta={b} did not reach stop_tol in {cfg.max_iters} iterations")
        errors.append(float(np.linalg.norm(traj.w_bar - spec.w_star)))
    return ScalingResult(loglog_slope(betas, errors), betas, errors)


class RateResult(NamedTuple):
    c_fit: float
    ok: bool
    prefix_mins: dict


def grad_norm_rate(traj, prefixes=(100, 1_000, 10_000), slack: float = 0.10) -> RateResult:
    """Check ``min_{t <= T} |grad_w L| <= c / sqrt(T)`` across prefixes.

    ``c`` is fitted at the first prefix; every later prefix must sit under the
    envelope within ``slack``. Prefixes longer than the trajectory are skipped,
    except that a run which stopped early keeps its final minimum.
    """
    g = np.asarray(traj.grad_norm if isinstance(traj, Trajectory) else traj, dtype=np.float64)
    if g.size < prefixes[0]:
        raise ValueError(f"trajectory needs at least {prefixes[0]} records")
    running_min = np.minimum.accumulate(g)
    mins = {}
    for T in prefixes:
        mins[T] = float(running_min[min(T, g.size - 1)])
    T0 = prefixes[0]
    c = mins[T0] * math.sqrt(T0)
    ok = all(mins[T] <= (1.0 + slack) * c / math.sqrt(T) for T in prefixes)
    return RateResult(c, ok, mins)


def default_lipschitz(spec: ProblemSpec, M: float | None = None) -> float:
    """Coplanar gradient bound at radius ``M`` (default ``|w*|/2``)."""
    return lipschitz_bound(spec.w_star_norm / 2.0 if M is None else M, spec)


def compliant_config(spec: ProblemSpec, init, penalty_kind, lambda_over_beta: float,
                     beta_fraction: float = 0.5, L: float | None = None, max_iters: int = 10_000,
                     stop_tol: float = 1e-12, a: float = 1.0, u_update_source: str = "previous_w"):
    """A configuration satisfying every hypothesis of the convergence guarantee.

    ``beta`` is ``beta_fraction`` times its bound at the measured ``delta`` and
    ``eta = 1/(beta + L)``.
    """
    from .optimizers import auto_step_size

    if L is None:
        L = default_lipschitz(spec)
    w0 = initial_point(init, spec.d)
    delta = PI - angle(w0, spec.w_star)
    beta = beta_fraction * beta_upper_bound(delta, spec.k)
    return RvsmConfig(
        eta=auto_step_size(beta, L),
        beta=beta,
        penalty=Penalty(penalty_kind, lambda_over_beta * beta, a),
        max_iters=max_iters,
        stop_tol=stop_tol,
        init=w0,
        u_update_source=u_update_source,
    )
