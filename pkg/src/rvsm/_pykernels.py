"""Pure-numpy iteration loop; reference semantics for the compiled kernel."""
import math

import numpy as np

from . import penalties as _pen
from .errors import DegenerateVector
from .population import ProblemSpec, grad

GD, RVSM, ADMM = 0, 1, 2
_KINDS = {0: _pen.PenaltyKind.L1, 1: _pen.PenaltyKind.L0, 2: _pen.PenaltyKind.TL1}


def advance(method, W, U, Z, start, stop, ws, k, eta, beta, lam, kind, a,
            stop_tol, source_current):
    """Same contract as the compiled ``advance``: returns ``(row, status, step_norm)``."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _advance(method, W, U, Z, start, stop, ws, k, eta, beta, lam, kind, a,
                        stop_tol, source_current)


def _advance(method, W, U, Z, start, stop, ws, k, eta, beta, lam, kind, a, stop_tol, source_current):
    spec = ProblemSpec(np.asarray(ws), k)
    pen = _pen.Penalty(_KINDS[kind], lam, a)
    r = start
    step = 0.0
    while r < stop:
        w = W[r]
        try:
            g = grad(w, spec)
        except DegenerateVector:
            return r, 2, step
        if method == GD:
            w_new = w - eta * g
        elif method == RVSM:
            w_new = w - eta * g - eta * beta * (w - U[r])
        else:
            w_new = w - eta * (g + Z[r] + beta * (w - U[r]))
        if not np.all(np.isfinite(w_new)):
            W[r + 1] = w_new
            return r, 3, step
        W[r + 1] = w_new
        if method == GD:
            U[r + 1] = w_new
        elif method == RVSM:
            U[r + 1] = _pen.prox(pen, w_new if source_current else w, beta)
        else:
            U[r + 1] = _pen.prox(pen, w_new + Z[r] / beta, beta)
            Z[r + 1] = Z[r] + beta * (w_new - U[r + 1])
        r += 1
        dw = w_new - w
        step = math.sqrt(float(np.dot(dw, dw)))
        if step <= stop_tol:
            return r, 1, step
    return r, 0, step
