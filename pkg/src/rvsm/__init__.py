"""Relaxed variable splitting for a one-hidden-layer no-overlap ReLU network.

Closed-form population loss, sparsity prox maps, RVSM / ADMM / GD loops with
a compiled inner kernel, Monte-Carlo cross-checks and convergence checkers.
"""
from .core import angle, make_rng, sample_unit_sphere
from .errors import (
    AnnulusViolation,
    DegenerateVector,
    InvalidBeta,
    InvalidConfig,
    InvalidRadius,
    InvalidRange,
    NonFinite,
    NotConverged,
    RvsmError,
    ShapeMismatch,
)
from .kernels import BACKEND
from .optimizers import (
    AdmmConfig,
    RandomSphereInit,
    RvsmConfig,
    Trajectory,
    run_admm,
    run_gd,
    run_rvsm,
)
from .penalties import Penalty, PenaltyKind, prox, prox_grid_oracle
from .population import ProblemSpec, critical_points, g_closed, grad, lipschitz_bound, loss

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "AnnulusViolation", "BACKEND", "DegenerateVector", "InvalidBeta",
    "InvalidConfig", "InvalidRadius", "InvalidRange", "NonFinite", "NotConverged",
    "Penalty", "PenaltyKind", "ProblemSpec", "RandomSphereInit", "RvsmConfig", "RvsmError",
    "ShapeMismatch", "Trajectory", "angle", "critical_points", "g_closed", "grad",
    "lipschitz_bound", "loss", "make_rng", "prox", "prox_grid_oracle", "run_admm", "run_gd",
    "run_rvsm", "sample_unit_sphere",
]
