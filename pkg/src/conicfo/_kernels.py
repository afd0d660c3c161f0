"""Compiled inner loops for the common case: diagonal-quadratic objective,
box set and a single zero / orthant / second-order cone.

Each kernel reproduces, iterate for iterate, the generic path built on
:func:`conicfo.icfg.icfg_run`; callers add the operation counts in bulk.
Kernels return ``(z, bad)`` where ``bad`` is the first iteration that
produced a non-finite iterate (0 if none).
"""

import math

import numpy as np
from numba import njit

from .cones import Box, NonnegOrthant, SecondOrder, Zero

CONE_ZERO, CONE_ORTHANT, CONE_SOC = 0, 1, 2


def fast_data(problem):
    """Arrays for the kernels, or None when the problem is not covered."""
    from .problem import DiagonalQuadratic

    f, U, K = problem.f, problem.U, problem.K
    if not isinstance(f, DiagonalQuadratic) or not isinstance(U, Box):
        return None
    if isinstance(K, Zero):
        code = CONE_ZERO
    elif isinstance(K, NonnegOrthant):
        code = CONE_ORTHANT
    elif isinstance(K, SecondOrder):
        code = CONE_SOC
    else:
        return None
    return (np.ascontiguousarray(problem.G), np.ascontiguousarray(problem.g),
            f.diag, f.linear, np.array(U.lower), np.array(U.upper), code)


@njit(cache=True)
def _proj_cone(v, code, out):
    m = v.shape[0]
    if code == 0:
        for i in range(m):
            out[i] = 0.0
    elif code == 1:
        for i in range(m):
            out[i] = v[i] if v[i] > 0.0 else 0.0
    else:
        t = v[m - 1]
        nx = 0.0
        for i in range(m - 1):
            nx += v[i] * v[i]
        nx = math.sqrt(nx)
        if nx <= t:
            for i in range(m):
                out[i] = v[i]
        elif nx <= -t:
            for i in range(m):
                out[i] = 0.0
        else:
            a = 0.5 * (nx + t)
            for i in range(m - 1):
                out[i] = (a / nx) * v[i]
            out[m - 1] = a


@njit(cache=True)
def _matvec(G, u, g, out):
    m, n = G.shape
    for i in range(m):
        s = g[i]
        for j in range(n):
            s += G[i, j] * u[j]
        out[i] = s


@njit(cache=True)
def _rmatvec(G, r, out):
    m, n = G.shape
    for j in range(n):
        out[j] = 0.0
    for i in range(m):
        ri = r[i]
        for j in range(n):
            out[j] += G[i, j] * ri


@njit(cache=True)
def _theta_next(theta):
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))


@njit(cache=True)
def auglag_inner(G, g, shift, mu, d, q, lo, hi, code, simple, L, budget, z0):
    """Accelerated engine on ``u -> [f(u)] + mu/2 dist_K(G u + g + shift)^2``.

    ``simple`` moves f into the prox (box-constrained diagonal prox);
    otherwise the prox is the box projection.
    """
    m, n = G.shape
    z_prev = z0.copy()
    w = z0.copy()
    z = z0.copy()
    v = np.empty(m)
    p = np.empty(m)
    grad = np.empty(n)
    theta = 1.0
    t = 1.0 / L
    for k in range(1, budget + 1):
        _matvec(G, w, g, v)
        for i in range(m):
            v[i] += shift[i]
        _proj_cone(v, code, p)
        for i in range(m):
            p[i] = v[i] - p[i]
        _rmatvec(G, p, grad)
        for j in range(n):
            gj = mu * grad[j]
            if not simple:
                gj += d[j] * w[j] + q[j]
            y = w[j] - t * gj
            if simple:
                y = (y - t * q[j]) / (1.0 + t * d[j])
            z[j] = min(max(y, lo[j]), hi[j])
        th = _theta_next(theta)
        beta = (theta - 1.0) / th
        for j in range(n):
            if not math.isfinite(z[j]):
                return z, k
            w[j] = z[j] + beta * (z[j] - z_prev[j])
            z_prev[j] = z[j]
        theta = th
    return z, 0


@njit(cache=True)
def ns_inner_smooth(c, mu, d, q, lo, hi, u0, Lf, budget, z0):
    """Constant-momentum accelerated method on
    ``f(u) + <c, u> + mu/2 ||u - u0||^2`` over the box, step ``1/Lf``."""
    n = z0.shape[0]
    z_prev = z0.copy()
    y = z0.copy()
    z = z0.copy()
    Lt = Lf + mu
    beta = (math.sqrt(Lt) - math.sqrt(mu)) / (math.sqrt(Lt) + math.sqrt(mu))
    for k in range(1, budget + 1):
        for j in range(n):
            gj = d[j] * y[j] + q[j] + c[j]
            v = y[j] - gj / Lf
            v = (mu * u0[j] + Lf * v) / Lt
            z[j] = min(max(v, lo[j]), hi[j])
        for j in range(n):
            if not math.isfinite(z[j]):
                return z, k
            y[j] = z[j] + beta * (z[j] - z_prev[j])
            z_prev[j] = z[j]
    return z, 0


@njit(cache=True)
def penalty_run(G, g, d, q, lo, hi, code, smoothed, simple, rho, musm, L, budget, z0):
    """Accelerated engine on the quadratic (``smoothed=False``) or smoothed
    exact (``smoothed=True``) penalty; f goes to the prox when ``simple``."""
    m, n = G.shape
    z_prev = z0.copy()
    w = z0.copy()
    z = z0.copy()
    v = np.empty(m)
    p = np.empty(m)
    grad = np.empty(n)
    theta = 1.0
    t = 1.0 / L
    for k in range(1, budget + 1):
        _matvec(G, w, g, v)
        _proj_cone(v, code, p)
        dist2 = 0.0
        for i in range(m):
            p[i] = v[i] - p[i]
            dist2 += p[i] * p[i]
        _rmatvec(G, p, grad)
        scale = rho
        if smoothed:
            scale = rho / math.sqrt(dist2 + musm * musm)
        for j in range(n):
            gj = scale * grad[j]
            if not simple:
                gj += d[j] * w[j] + q[j]
            y = w[j] - t * gj
            if simple:
                y = (y - t * q[j]) / (1.0 + t * d[j])
            z[j] = min(max(y, lo[j]), hi[j])
        th = _theta_next(theta)
        beta = (theta - 1.0) / th
        for j in range(n):
            if not math.isfinite(z[j]):
                return z, k
            w[j] = z[j] + beta * (z[j] - z_prev[j])
            z_prev[j] = z[j]
        theta = th
    return z, 0
