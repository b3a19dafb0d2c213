"""Compiled Householder kernels.

Compiled with ``nogil=True`` so worker threads factor blocks concurrently.
Loops run in a fixed order without fastmath, so results are bit-reproducible.
"""

import math

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def geqr(A):
    """Factor a copy of ``A`` (p x r, p >= r).

    Returns ``V`` (p x r, unit lower trapezoidal), ``tau`` (r,) and the
    r x r upper triangular ``R`` with nonnegative diagonal.  The reflector
    ``v`` is chosen so that ``H x = +||x|| e_1`` (Parlett's formula), which
    puts the sign convention into the reflectors and avoids cancellation.
    """
    p, r = A.shape
    W = A.copy()
    V = np.zeros((p, r))
    tau = np.zeros(r)
    for k in range(r):
        scale = 0.0
        for i in range(k, p):
            a = abs(W[i, k])
            if a > scale:
                scale = a
        x0 = W[k, k]
        if scale == 0.0:
            V[k, k] = 1.0
            continue
        sigma = 0.0
        for i in range(k + 1, p):
            t = W[i, k] / scale
            sigma += t * t
        xs = x0 / scale
        mu = math.sqrt(xs * xs + sigma)
        if sigma == 0.0:
            V[k, k] = 1.0
            if x0 < 0.0:
                tau[k] = 2.0
                for j in range(k, r):
                    W[k, j] = -W[k, j]
            continue
        if xs <= 0.0:
            v0 = xs - mu
        else:
            v0 = -sigma / (xs + mu)
        tk = 2.0 * v0 * v0 / (sigma + v0 * v0)
        tau[k] = tk
        V[k, k] = 1.0
        for i in range(k + 1, p):
            V[i, k] = (W[i, k] / scale) / v0
        for j in range(k, r):
            s = W[k, j]
            for i in range(k + 1, p):
                s += V[i, k] * W[i, j]
            s *= tk
            W[k, j] -= s
            for i in range(k + 1, p):
                W[i, j] -= s * V[i, k]
        W[k, k] = mu * scale
        for i in range(k + 1, p):
            W[i, k] = 0.0
    R = np.zeros((r, r))
    for i in range(r):
        for j in range(i, r):
            R[i, j] = W[i, j]
    return V, tau, R


@numba.njit(nogil=True, cache=True)
def apply_qt(V, tau, X):
    """``H_r ... H_1 X`` for a copy of X (p x m); i.e. the full ``Q^T X``."""
    p, r = V.shape
    m = X.shape[1]
    Y = X.copy()
    for k in range(r):
        tk = tau[k]
        if tk == 0.0:
            continue
        for j in range(m):
            s = Y[k, j]
            for i in range(k + 1, p):
                s += V[i, k] * Y[i, j]
            s *= tk
            Y[k, j] -= s
            for i in range(k + 1, p):
                Y[i, j] -= s * V[i, k]
    return Y


@numba.njit(nogil=True, cache=True)
def apply_q(V, tau, X):
    """``H_1 ... H_r X`` for a copy of X (p x m); i.e. the full ``Q X``."""
    p, r = V.shape
    m = X.shape[1]
    Y = X.copy()
    for k in range(r - 1, -1, -1):
        tk = tau[k]
        if tk == 0.0:
            continue
        for j in range(m):
            s = Y[k, j]
            for i in range(k + 1, p):
                s += V[i, k] * Y[i, j]
            s *= tk
            Y[k, j] -= s
            for i in range(k + 1, p):
                Y[i, j] -= s * V[i, k]
    return Y
