# cython: language_level=3
"""Compiled iteration loop for gradient descent, RVSM and gradient-step ADMM.

Mirrors ``rvsm._pykernels.advance`` exactly in semantics; the numpy version
is the reference and the fallback.
"""
from libc.math cimport sqrt, sin, cos, acos, atan2, fabs, copysign, isfinite

cdef double PI = 3.141592653589793
cdef double EPS_NORM = 1e-12
cdef double TIE_RTOL = 1e-12

DEF GD = 0
DEF RVSM = 1
DEF ADMM = 2

DEF L1 = 0
DEF L0 = 1
DEF TL1 = 2


cdef int _grad(const double[::1] w, const double[::1] ws, double ns, int k,
               double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, d = w.shape[0]
    cdef double nw = 0.0, sd = 0.0, sp = 0.0, t, theta, ratio, cw, cs, kk
    for i in range(d):
        nw += w[i] * w[i]
    nw = sqrt(nw)
    if nw < EPS_NORM:
        return 1
    for i in range(d):
        t = w[i] / nw - ws[i] / ns
        sd += t * t
        t = w[i] / nw + ws[i] / ns
        sp += t * t
    theta = 2.0 * atan2(sqrt(sd), sqrt(sp))
    kk = <double>(k * k - k)
    ratio = ns / nw
    cw = k + kk / PI - (k / PI) * ratio * sin(theta) - (kk / PI) * ratio
    cs = (k / PI) * (PI - theta)
    for i in range(d):
        out[i] = (cw * w[i] - cs * ws[i]) / (k * k)
    return 0


cdef double _prox1(double w, int kind, double lam, double beta, double a,
                   double tau) noexcept nogil:
    cdef double x, c, p, q, phi, s, u, obj_u, obj_0
    if lam == 0.0:
        return w
    if kind == L1:
        x = fabs(w) - tau
        if x > 0.0:
            return copysign(x, w) if w != 0.0 else 0.0
        return 0.0
    if kind == L0:
        return w if fabs(w) > tau else 0.0
    x = fabs(w)
    c = (lam / beta) * a * (a + 1.0)
    p = a + x
    q = 1.0 - 27.0 * c / (2.0 * p * p * p)
    if not (q >= -1.0):
        return 0.0
    if q > 1.0:
        q = 1.0
    phi = acos(q)
    s = p / 3.0 + (2.0 * p / 3.0) * cos(phi / 3.0)
    u = s - a
    if u < 0.0:
        u = 0.0
    if u > x:
        u = x
    if not (u > 0.0):
        return 0.0
    obj_u = lam * (a + 1.0) * u / (a + u) + 0.5 * beta * (x - u) * (x - u)
    obj_0 = 0.5 * beta * x * x
    if obj_u < obj_0 * (1.0 - TIE_RTOL):
        return copysign(u, w)
    return 0.0


def prox_vector(double[::1] w, int kind, double lam, double beta, double a):
    """Compiled prox on a contiguous vector (for cross-checking the numpy one)."""
    cdef Py_ssize_t i, d = w.shape[0]
    cdef double tau = _threshold(kind, lam, beta)
    out = [0.0] * d
    for i in range(d):
        out[i] = _prox1(w[i], kind, lam, beta, a, tau)
    return out


cdef double _threshold(int kind, double lam, double beta) noexcept nogil:
    if kind == L1:
        return lam / beta
    if kind == L0:
        return sqrt(2.0 * lam / beta)
    return 0.0


def advance(int method, double[:, ::1] W, double[:, ::1] U, double[:, ::1] Z,
            Py_ssize_t start, Py_ssize_t stop, const double[::1] ws, int k,
            double eta, double beta, double lam, int kind, double a,
            double stop_tol, bint source_current):
    """Fill rows ``start+1 .. stop`` of the iterate buffers from row ``start``.

    Returns ``(row, status, step_norm)`` where ``row`` is the last filled row
    and ``status`` is 0 (chunk exhausted), 1 (step norm <= stop_tol),
    2 (degenerate iterate at ``row``) or 3 (non-finite update at ``row + 1``).
    """
    cdef Py_ssize_t d = W.shape[1]
    cdef Py_ssize_t r, i
    cdef double ns = 0.0, step = 0.0, dw, tau, v
    cdef double[::1] g = W[start].copy()
    cdef int status = 0
    cdef bint finite
    for i in range(d):
        ns += ws[i] * ws[i]
    ns = sqrt(ns)
    tau = _threshold(kind, lam, beta)
    r = start
    with nogil:
        while r < stop:
            if _grad(W[r], ws, ns, k, g):
                status = 2
                break
            finite = True
            step = 0.0
            for i in range(d):
                if method == GD:
                    v = W[r, i] - eta * g[i]
                elif method == RVSM:
                    v = W[r, i] - eta * g[i] - eta * beta * (W[r, i] - U[r, i])
                else:
                    v = W[r, i] - eta * (g[i] + Z[r, i] + beta * (W[r, i] - U[r, i]))
                if not isfinite(v):
                    finite = False
                W[r + 1, i] = v
                dw = v - W[r, i]
                step += dw * dw
            if not finite:
                status = 3
                break
            for i in range(d):
                if method == GD:
                    U[r + 1, i] = W[r + 1, i]
                elif method == RVSM:
                    if source_current:
                        U[r + 1, i] = _prox1(W[r + 1, i], kind, lam, beta, a, tau)
                    else:
                        U[r + 1, i] = _prox1(W[r, i], kind, lam, beta, a, tau)
                else:
                    U[r + 1, i] = _prox1(W[r + 1, i] + Z[r, i] / beta, kind, lam, beta, a, tau)
                    Z[r + 1, i] = Z[r, i] + beta * (W[r + 1, i] - U[r + 1, i])
            r += 1
            step = sqrt(step)
            if step <= stop_tol:
                status = 1
                break
    return r, status, step
