"""Cyclic Jacobi eigenvalue iteration for dense symmetric matrices."""

import math

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def _offdiag_norm(A):
    n = A.shape[0]
    s = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            s += A[p, q] * A[p, q]
    return math.sqrt(2.0 * s)


@numba.njit(nogil=True, cache=True)
def cyclic_jacobi(K, rel_tol, max_sweeps):
    """Row-cyclic Jacobi sweeps on a copy of ``K``.

    Returns ``(eigenvalues, V, sweeps, off, converged)``, unsorted, with
    ``K ~= V diag(eigenvalues) V^T``.  Convergence is declared when the
    off-diagonal Frobenius norm drops below ``rel_tol * ||K||_F``.
    """
    n = K.shape[0]
    A = K.copy()
    V = np.eye(n)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += A[i, j] * A[i, j]
    norm = math.sqrt(norm)
    off = _offdiag_norm(A)
    sweeps = 0
    while off > rel_tol * norm and off > 0.0:
        if sweeps == max_sweeps:
            return np.diag(A).copy(), V, sweeps, off, False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = _offdiag_norm(A)
    return np.diag(A).copy(), V, sweeps, off, True
