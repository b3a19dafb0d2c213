"""Covariance kernels, evaluation grids and synthetic spectra.

Point sets are ``(n, d)`` float arrays; Gram matrices are dense symmetric
``(n, n)`` arrays built from the upper triangle and mirrored, so symmetry
holds bit-for-bit.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _rng
from ._special import log_bessel_k
from .tsqr import householder_qr, explicit_q

SQEXP = "sqexp"
MATERN = "matern"

__all__ = [
    "KernelSpec",
    "equispaced_grid",
    "as_points",
    "eval_kernel",
    "gram_matrix",
    "synthetic_psd",
    "planted_spectrum",
    "GramRows",
    "cross_covariance",
]


@dataclass(frozen=True)
class KernelSpec:
    """Parameterized covariance function.

    ``sqexp``: ``theta1 * exp(-theta2 * r**2)``.
    ``matern``: ``theta1 * z**nu * K_nu(z) / (Gamma(nu) 2**(nu-1))`` with
    ``z = sqrt(2 nu) r / theta2``.
    """

    kind: str = SQEXP
    theta1: float = 1.0
    theta2: float = 1.0
    nu: float = 0.5

    def __post_init__(self):
        if self.kind not in (SQEXP, MATERN):
            raise ValueError(f"unknown kernel kind {self.kind!r}; use 'sqexp' or 'matern'")
        if not self.theta1 > 0:
            raise ValueError(f"theta1 must be positive, got {self.theta1}")
        if not self.theta2 > 0:
            raise ValueError(f"theta2 must be positive, got {self.theta2}")
        if self.kind == MATERN and not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @classmethod
    def squared_exponential(cls, theta1=1.0, theta2=1.0):
        return cls(SQEXP, float(theta1), float(theta2))

    @classmethod
    def matern(cls, theta1=1.0, theta2=1.0, nu=0.5):
        return cls(MATERN, float(theta1), float(theta2), float(nu))

    def of_sqdist(self, sqdist):
        """Kernel value as a function of squared distance (scalar or array)."""
        sqdist = np.asarray(sqdist, dtype=float)
        if self.kind == SQEXP:
            return self.theta1 * np.exp(-self.theta2 * sqdist)
        flat = sqdist.ravel()
        # Matern is evaluated once per distinct distance; grids repeat a lot.
        uniq, inverse = np.unique(flat, return_inverse=True)
        vals = np.array([self._matern_at(math.sqrt(s)) for s in uniq])
        return vals[inverse].reshape(sqdist.shape)

    def _matern_at(self, r):
        if r == 0.0:
            return self.theta1
        nu = self.nu
        z = math.sqrt(2.0 * nu) * r / self.theta2
        p = nu - 0.5
        if p >= 0 and p == int(p) and p <= 20:
            return self.theta1 * _matern_half_integer(int(p), z)
        log_val = (
            nu * math.log(z) + log_bessel_k(nu, z) - math.lgamma(nu) - (nu - 1.0) * math.log(2.0)
        )
        return self.theta1 * math.exp(log_val)


def _matern_half_integer(p, z):
    # nu = p + 1/2 closed form: exp(-z) * p!/(2p)! * sum (p+i)!/(i!(p-i)!) (2z)**(p-i)
    total = 0.0
    for i in range(p + 1):
        total += math.factorial(p + i) / (math.factorial(i) * math.factorial(p - i)) * (2.0 * z) ** (
            p - i
        )
    return math.exp(-z) * math.factorial(p) / math.factorial(2 * p) * total


def equispaced_grid(n, a=0.0, b=1.0):
    """``n`` equally spaced 1-D points from ``a`` to ``b`` inclusive, shape ``(n, 1)``."""
    n = int(n)
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    if not a < b:
        raise ValueError(f"grid needs a < b, got a={a}, b={b}")
    i = np.arange(n, dtype=float)
    return (a + i * (b - a) / (n - 1)).reshape(n, 1)


def as_points(pts):
    """Validate a point set, promoting 1-D input to a column of 1-D points."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"point set must have shape (n, d) with n, d >= 1, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point set contains non-finite coordinates")
    return pts


def eval_kernel(spec, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"points must be 1-D with equal dimension, got {x.shape} and {y.shape}")
    sq = float(np.sum((x - y) ** 2))
    return float(spec.of_sqdist(sq))


def _sqdist_matrix(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sum(diff * diff, axis=-1)


def cross_covariance(spec, a, b):
    """Kernel matrix between two point sets, shape ``(len(a), len(b))``."""
    a = as_points(a)
    b = as_points(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return spec.of_sqdist(_sqdist_matrix(a, b))


def gram_matrix(spec, pts):
    """Dense Gram matrix ``k(i, j) = C(x_i, x_j)``, exactly symmetric."""
    pts = as_points(pts)
    n = pts.shape[0]
    iu, ju = np.triu_indices(n)
    diff = pts[iu] - pts[ju]
    upper = spec.of_sqdist(np.sum(diff * diff, axis=-1))
    K = np.empty((n, n))
    K[iu, ju] = upper
    K[ju, iu] = upper
    return K


class GramRows:
    """Gram matrix exposed one row block at a time, never stored in full.

    Usable wherever a sketch is applied (``shape`` and ``rows(start, stop)``).
    """

    def __init__(self, spec, pts):
        self.spec = spec
        self.pts = as_points(pts)
        n = self.pts.shape[0]
        self.shape = (n, n)

    def rows(self, start, stop):
        return self.spec.of_sqdist(_sqdist_matrix(self.pts[start:stop], self.pts))


def planted_spectrum(n, lambda1, lambda2):
    """Decaying spectrum ``lambda1 * exp(-lambda2 * i)`` for ``i = 1..n``."""
    i = np.arange(1, int(n) + 1, dtype=float)
    return lambda1 * np.exp(-lambda2 * i)


def synthetic_psd(n, lambda1=1.0, lambda2=0.01, seed=0):
    """Random orthogonal conjugation of a planted exponentially decaying spectrum.

    Returns
    -------
    K : ndarray, shape (n, n)
        ``E diag(d) E^T`` with ``E`` the orthonormalized Q of an i.i.d.
        standard normal matrix, symmetrized.
    eigenvalues : ndarray, shape (n,)
        The planted spectrum, nonincreasing.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"synthetic_psd needs n >= 2, got {n}")
    if not lambda1 > 0 or lambda2 < 0:
        raise ValueError("need lambda1 > 0 and lambda2 >= 0")
    G = _rng.make_rng(seed).standard_normal((n, n))
    E = explicit_q(householder_qr(G))
    d = planted_spectrum(n, lambda1, lambda2)
    K = (E * d) @ E.T
    K = 0.5 * (K + K.T)
    return K, d
