"""scikit-learn compatible estimators built on the sketching pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import gp
from .exceptions import SingularMatrixError
from .kernels import KernelSpec, cross_covariance, gram_matrix
from .lowrank import (
    check_symmetric,
    projection_error,
    randomized_lowrank,
    sketched_system_condition,
)
from .transforms import SKETCH_KINDS, apply_sketch, build_sketch

__all__ = [
    "StructuredRandomProjection",
    "RandomizedLowRankApproximation",
    "SketchedGaussianProcessRegressor",
]


def _check_sketch_kind(kind):
    if str(kind).lower() not in SKETCH_KINDS:
        raise ValueError(f"sketch must be one of {SKETCH_KINDS}, got {kind!r}")
    return str(kind).lower()


class StructuredRandomProjection(TransformerMixin, BaseEstimator):
    """Project samples onto ``n_components`` sketch directions, ``X @ Omega``.

    Parameters
    ----------
    n_components : int, default=8
        Sketch size ``r``.
    sketch : {"dct", "dht", "wht", "gaussian"}, default="dct"
        Structured (orthonormal columns) or dense Gaussian sketch.
    random_state : int, default=0
        Seed of the sketch.
    workers : int, default=1
        Threads used to apply the sketch.

    Attributes
    ----------
    sketch_ : StructuredSketch or GaussianSketch
    n_features_in_ : int
    """

    def __init__(self, n_components=8, sketch="dct", random_state=0, workers=1):
        self.n_components = n_components
        self.sketch = sketch
        self.random_state = random_state
        self.workers = workers

    def fit(self, X, y=None):
        X = check_array(X)
        kind = _check_sketch_kind(self.sketch)
        self.n_features_in_ = X.shape[1]
        self.sketch_ = build_sketch(X.shape[1], self.n_components, kind, self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "sketch_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the projection was fit with "
                f"{self.n_features_in_}"
            )
        return apply_sketch(X, self.sketch_, self.workers)


class RandomizedLowRankApproximation(TransformerMixin, BaseEstimator):
    """Low-rank eigen-approximation of a precomputed symmetric PSD matrix.

    ``fit`` takes the ``(n, n)`` matrix itself (e.g. a Gram matrix).  The
    range is found from a sketch and factored with blocked TSQR.

    Parameters
    ----------
    rank : int, default=10
    sketch : str, default="dct"
    random_state : int, default=0
    num_blocks : int or None, default=None
        TSQR row blocks; ``None`` uses ``floor(n / 2 rank) + 1``.
    scheme : {"tree", "sequential"}, default="tree"
    workers : int, default=1

    Attributes
    ----------
    components_ : ndarray of shape (n, rank)
        Orthonormal approximate eigenvectors.
    eigenvalues_ : ndarray of shape (rank,)
    qr_ : TsqrFactors
        Implicit basis of the sketched range.
    projection_error_ : float
        Frobenius norm of ``K - Q Q^T K``.
    sketch_condition_ : float
        Condition number of ``(K Omega) R^{-1}`` (1 in exact arithmetic);
        ``inf`` when ``R`` is numerically singular.
    """

    def __init__(self, rank=10, sketch="dct", random_state=0, num_blocks=None, scheme="tree",
                 workers=1):
        self.rank = rank
        self.sketch = sketch
        self.random_state = random_state
        self.num_blocks = num_blocks
        self.scheme = scheme
        self.workers = workers

    def fit(self, X, y=None):
        K = check_symmetric(check_array(X))
        kind = _check_sketch_kind(self.sketch)
        factor, found = randomized_lowrank(
            K, self.rank, kind, self.random_state, self.num_blocks, self.scheme,
            workers=self.workers, return_range=True,
        )
        self.n_features_in_ = K.shape[1]
        self.components_ = factor.U
        self.eigenvalues_ = factor.eigenvalues
        self.factor_ = factor
        self.qr_ = found.Q
        self.projection_error_ = projection_error(K, found.Q, "fro", self.workers)
        try:
            self.sketch_condition_ = sketched_system_condition(found.KOmega, found.Q.final_R)
        except SingularMatrixError:
            # rank above the numerical rank of K: the factor is fine, the diagnostic is not
            self.sketch_condition_ = np.inf
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        return X @ self.components_

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z, dtype=float) @ self.components_.T

    def reconstruct(self):
        """Dense ``U diag(eigenvalues) U^T``."""
        check_is_fitted(self, "components_")
        return self.factor_.to_dense()


class SketchedGaussianProcessRegressor(RegressorMixin, BaseEstimator):
    """Zero-mean GP regression with a sketched low-rank training covariance.

    The training covariance ``K`` is replaced by its rank-``rank``
    approximation plus ``nugget * I``; solves and the log-likelihood then
    cost ``O(n rank)``.

    Parameters
    ----------
    kernel : {"sqexp", "matern"}, default="sqexp"
    theta1, theta2, nu : float
        Kernel parameters (``nu`` only for Matern).
    nugget : float, default=1e-2
        Observation noise variance, strictly positive.
    rank : int or None, default=None
        ``None`` means full rank (``n``).
    sketch, random_state, num_blocks, scheme, workers
        Passed to the low-rank approximation.

    Attributes
    ----------
    model_ : GpModel
    log_marginal_likelihood_ : float
    alpha_ : ndarray of shape (n,)
        ``(K_approx + nugget I)^{-1} y``.
    """

    def __init__(self, kernel="sqexp", theta1=1.0, theta2=1.0, nu=0.5, nugget=1e-2, rank=None,
                 sketch="dct", random_state=0, num_blocks=None, scheme="tree", workers=1):
        self.kernel = kernel
        self.theta1 = theta1
        self.theta2 = theta2
        self.nu = nu
        self.nugget = nugget
        self.rank = rank
        self.sketch = sketch
        self.random_state = random_state
        self.num_blocks = num_blocks
        self.scheme = scheme
        self.workers = workers

    def _spec(self):
        return KernelSpec(self.kernel, float(self.theta1), float(self.theta2), float(self.nu))

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        spec = self._spec()
        K = gram_matrix(spec, X)
        rank = X.shape[0] if self.rank is None else int(self.rank)
        factor = randomized_lowrank(
            K, rank, _check_sketch_kind(self.sketch), self.random_state, self.num_blocks,
            self.scheme, workers=self.workers,
        )
        self.spec_ = spec
        self.X_train_ = X
        self.n_features_in_ = X.shape[1]
        self.model_ = gp.GpModel(factor, float(self.nugget))
        self.alpha_ = gp.woodbury_solve(self.model_, y)
        self.log_marginal_likelihood_ = gp.log_likelihood(self.model_, y)
        return self

    def predict(self, X):
        check_is_fitted(self, "alpha_")
        X = check_array(X)
        return cross_covariance(self.spec_, X, self.X_train_) @ self.alpha_
