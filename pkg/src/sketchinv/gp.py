"""Gaussian-process computations with a low-rank-plus-nugget covariance.

The covariance is ``U diag(lam) U^T + nugget * I``.  Solves use the Woodbury
identity and the log-determinant uses the matrix determinant lemma, so
everything costs ``O(n r)`` per right-hand side.
"""

from dataclasses import dataclass
import math

import numpy as np

from .lowrank import LowRankFactor

__all__ = ["GpModel", "woodbury_solve", "log_likelihood", "log_determinant", "predict_mean"]


@dataclass(frozen=True, eq=False)
class GpModel:
    factor: LowRankFactor
    nugget: float

    def __post_init__(self):
        if not (self.nugget > 0 and math.isfinite(self.nugget)):
            raise ValueError(f"nugget must be a positive finite variance, got {self.nugget}")
        if np.any(self.factor.eigenvalues + self.nugget <= 0):
            raise ValueError("covariance eigenvalues plus nugget must be positive")

    @property
    def n(self):
        return self.factor.n

    @classmethod
    def from_arrays(cls, U, eigenvalues, nugget):
        U = np.asarray(U, dtype=float)
        lam = np.asarray(eigenvalues, dtype=float)
        if U.ndim == 1:
            U = U.reshape(-1, 1)
        return cls(LowRankFactor(U, lam.reshape(-1)), float(nugget))


def _rhs(m, B):
    B = np.asarray(B, dtype=float)
    if B.shape[0] != m.n:
        raise ValueError(f"right-hand side must have {m.n} rows, got shape {B.shape}")
    return B


def woodbury_solve(m, B):
    """``(U diag(lam) U^T + s I)^{-1} B``."""
    B = _rhs(m, B)
    U, lam, s = m.factor.U, m.factor.eigenvalues, m.nugget
    w = lam / (lam + s)
    UtB = U.T @ B
    if B.ndim == 1:
        return (B - U @ (w * UtB)) / s
    return (B - U @ (w[:, None] * UtB)) / s


def log_determinant(m):
    lam, s = m.factor.eigenvalues, m.nugget
    return float(np.sum(np.log(lam + s)) + (m.n - lam.shape[0]) * math.log(s))


def log_likelihood(m, y):
    """Zero-mean Gaussian log-density of ``y`` under the model covariance."""
    y = _rhs(m, y)
    if y.ndim != 1:
        raise ValueError(f"y must be a vector, got shape {y.shape}")
    quad = float(y @ woodbury_solve(m, y))
    return -0.5 * (m.n * math.log(2.0 * math.pi) + log_determinant(m) + quad)


def predict_mean(m, cross_cov, y):
    """Posterior mean ``cross_cov @ Sigma^{-1} y`` at the test points."""
    cross_cov = np.asarray(cross_cov, dtype=float)
    if cross_cov.ndim != 2 or cross_cov.shape[1] != m.n:
        raise ValueError(f"cross_cov must have shape (n_test, {m.n}), got {cross_cov.shape}")
    return cross_cov @ woodbury_solve(m, y)
