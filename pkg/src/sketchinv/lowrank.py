"""Eigendecompositions, truncations and randomized low-rank approximation.

Also the diagnostics used to judge a sketch: projection error
``||K - Q Q^T K||`` and the conditioning of ``(K Omega) R^{-1}``.
"""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from . import _jacobi
from .exceptions import ConvergenceError, SingularMatrixError
from .transforms import apply_sketch, build_sketch
from .tsqr import TREE, apply_q, apply_qt, back_substitute, tsqr_factor

MAX_JACOBI_ORDER = 4096
FROBENIUS = "fro"
SPECTRAL = "spectral"
_NORM_ALIASES = {"fro": FROBENIUS, "frobenius": FROBENIUS, "spectral": SPECTRAL, "2": SPECTRAL}

__all__ = [
    "EigenDecomposition",
    "LowRankFactor",
    "Truncation",
    "RangeFinderResult",
    "check_symmetric",
    "jacobi_eig",
    "truncate",
    "condition_number",
    "range_finder",
    "projection_error",
    "spectral_norm",
    "sketched_system_condition",
    "randomized_lowrank",
    "tail_bound",
]


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True, eq=False)
class LowRankFactor:
    """``K ~= U diag(eigenvalues) U^T`` with orthonormal ``U`` (n x r)."""

    U: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        if self.U.ndim != 2 or self.eigenvalues.shape != (self.U.shape[1],):
            raise ValueError(
                f"U must be (n, r) and eigenvalues (r,); got {self.U.shape} and "
                f"{self.eigenvalues.shape}"
            )

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def rank(self):
        return self.U.shape[1]

    def to_dense(self):
        return (self.U * self.eigenvalues) @ self.U.T


class Truncation(NamedTuple):
    factor: LowRankFactor
    spectral_error: float
    frobenius_error: float


class RangeFinderResult(NamedTuple):
    Q: object
    KOmega: np.ndarray


def check_symmetric(K, name="K"):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError(f"{name} contains non-finite entries")
    scale = float(np.max(np.abs(K))) if K.size else 0.0
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-12 * scale:
        raise ValueError(f"{name} is not symmetric")
    return K


def jacobi_eig(K, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenpairs are sorted by decreasing eigenvalue.

    Raises
    ------
    ConvergenceError
        If the off-diagonal norm is still above ``tol * ||K||_F`` after
        ``max_sweeps`` sweeps.
    """
    K = check_symmetric(K)
    n = K.shape[0]
    if n > MAX_JACOBI_ORDER:
        raise ValueError(f"jacobi_eig is limited to n <= {MAX_JACOBI_ORDER}, got {n}")
    if n == 0:
        return EigenDecomposition(np.empty(0), np.empty((0, 0)))
    evals, V, sweeps, off, ok = _jacobi.cyclic_jacobi(np.ascontiguousarray(K), tol, max_sweeps)
    if not ok:
        raise ConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})",
            residual=off,
        )
    order = np.argsort(-evals, kind="stable")
    return EigenDecomposition(evals[order], np.ascontiguousarray(V[:, order]))


def truncate(eig, m):
    """Best rank-``m`` approximation from a sorted eigendecomposition.

    The reported errors are ``d(m+1)`` (spectral) and
    ``sqrt(sum_{j>m} d(j)^2)`` (Frobenius).
    """
    d, U = eig
    n = d.shape[0]
    m = int(m)
    if not 1 <= m <= n:
        raise ValueError(f"truncation rank must be in [1, {n}], got {m}")
    tail = d[m:]
    spectral = float(np.max(np.abs(tail))) if tail.size else 0.0
    frob = float(np.sqrt(np.sum(tail * tail)))
    factor = LowRankFactor(np.ascontiguousarray(U[:, :m]), np.array(d[:m]))
    return Truncation(factor, spectral, frob)


def condition_number(eigenvalues, m=None):
    """``d(1) / d(m)`` over a nonincreasing spectrum; ``inf`` if ``d(m) <= 0``."""
    d = np.asarray(eigenvalues, dtype=float)
    m = d.shape[0] if m is None else int(m)
    if not 1 <= m <= d.shape[0]:
        raise ValueError(f"m must be in [1, {d.shape[0]}], got {m}")
    if d[m - 1] <= 0.0:
        return math.inf
    return float(d[0] / d[m - 1])


def range_finder(K, r, sketch_kind="dct", seed=0, num_blocks=None, scheme=TREE, chains=1,
                 workers=1):
    """Sketch ``K`` to ``K @ Omega`` and factor it with TSQR.

    Returns the implicit orthonormal basis (``TsqrFactors``) and the sketch.
    """
    n = K.shape[1]
    sketch = build_sketch(n, r, sketch_kind, seed)
    KOmega = apply_sketch(K, sketch, workers)
    Q = tsqr_factor(KOmega, num_blocks, scheme, chains=chains, workers=workers)
    return RangeFinderResult(Q, KOmega)


def spectral_norm(M, tol=1e-8, max_iter=10_000):
    """Largest singular value of ``M`` by power iteration on ``M^T M``.

    Starts from the normalized all-ones vector and stops once the eigen-residual
    ``||M^T M v - theta v||`` is at most ``tol * theta``.
    """
    M = np.asarray(M, dtype=float)
    v = np.full(M.shape[1], 1.0 / math.sqrt(M.shape[1]))
    for _ in range(max_iter):
        w = M @ v
        z = M.T @ w
        theta = float(v @ z)
        if theta <= 0.0:
            return 0.0
        resid = float(np.linalg.norm(z - theta * v))
        if resid <= tol * theta:
            return math.sqrt(theta)
        v = z / np.linalg.norm(z)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (residual {resid:.3e})",
        residual=resid,
    )


def projection_error(K, Q, norm=FROBENIUS, workers=1):
    """``||K - Q Q^T K||`` in the Frobenius or spectral norm."""
    norm_name = _NORM_ALIASES.get(str(norm).lower())
    if norm_name is None:
        raise ValueError(f"unknown norm {norm!r}; use 'fro' or 'spectral'")
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != Q.n:
        raise ValueError(f"K must have {Q.n} rows, got shape {K.shape}")
    M = K - apply_q(Q, apply_qt(Q, K, workers), workers)
    if norm_name == FROBENIUS:
        return float(np.linalg.norm(M))
    return spectral_norm(M)


def tail_bound(eigenvalues, r, n=None):
    """``(1 + sqrt(7 n / r)) * sum_{j > r} d(j)`` from a known spectrum."""
    d = np.asarray(eigenvalues, dtype=float)
    n = d.shape[0] if n is None else int(n)
    return float((1.0 + math.sqrt(7.0 * n / r)) * np.sum(d[r:]))


def sketched_system_condition(KOmega, final_R):
    """Condition number of ``(K Omega) R^{-1}``.

    ``X R = K Omega`` is solved by backward substitution on the index-reversed
    transposed system; the ratio is ``sqrt`` of the extreme eigenvalues of
    ``X^T X``.
    """
    KOmega = np.asarray(KOmega, dtype=float)
    R = np.asarray(final_R, dtype=float)
    r = R.shape[0]
    if KOmega.ndim != 2 or KOmega.shape[1] != r:
        raise ValueError(f"KOmega must have {r} columns, got shape {KOmega.shape}")
    # (J R^T J)(J X^T) = J KOmega^T with J the index reversal; J R^T J is upper triangular.
    flipped = R.T[::-1, ::-1]
    try:
        Z = back_substitute(flipped, KOmega.T[::-1])
    except SingularMatrixError as err:
        raise SingularMatrixError(r - 1 - err.index, err.value, err.tol) from None
    X = Z[::-1].T
    G = X.T @ X
    evals = jacobi_eig(0.5 * (G + G.T)).eigenvalues
    if evals[-1] <= 0.0:
        return math.inf
    return math.sqrt(evals[0] / evals[-1])


def randomized_lowrank(K, r, sketch_kind="dct", seed=0, num_blocks=None, scheme=TREE, chains=1,
                       workers=1, return_range=False):
    """Rank-``r`` eigen-approximation of a symmetric matrix from a sketched basis.

    With ``Q`` from the range finder, ``B = Q^T K Q = V diag(lam) V^T`` and
    ``U = Q V``.
    """
    K = check_symmetric(K)
    found = range_finder(K, r, sketch_kind, seed, num_blocks, scheme, chains, workers)
    Q = found.Q
    QtK = apply_qt(Q, K, workers)
    B = apply_qt(Q, QtK.T, workers)
    eig = jacobi_eig(0.5 * (B + B.T))
    U = apply_q(Q, eig.eigenvectors, workers)
    factor = LowRankFactor(U, eig.eigenvalues)
    if return_range:
        return factor, found
    return factor
