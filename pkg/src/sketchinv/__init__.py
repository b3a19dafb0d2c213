"""Fast approximate inversion of large covariance matrices.

Structured random sketches (``K @ Omega`` with Omega built from a fast
orthogonal transform) give a tall matrix whose blocked TSQR factorization
yields an orthonormal basis for the dominant column space of ``K``.  That
basis feeds low-rank eigen-approximations, conditioning diagnostics and
Gaussian-process likelihoods.
"""

__version__ = "0.1.0"

from .exceptions import ConvergenceError, SingularMatrixError
from .kernels import (
    GramRows,
    KernelSpec,
    cross_covariance,
    equispaced_grid,
    eval_kernel,
    gram_matrix,
    synthetic_psd,
)
from .transforms import (
    GaussianSketch,
    StructuredSketch,
    build_gaussian,
    build_structured,
    fast_transform,
    gaussian_apply,
    materialize,
    sketch_apply,
)
from .tsqr import TsqrFactors, apply_q, apply_qt, back_substitute, householder_qr, tsqr_factor
from .lowrank import (
    EigenDecomposition,
    LowRankFactor,
    condition_number,
    jacobi_eig,
    projection_error,
    randomized_lowrank,
    range_finder,
    sketched_system_condition,
    truncate,
)
from .gp import GpModel, log_likelihood, predict_mean, woodbury_solve
from .estimators import (
    RandomizedLowRankApproximation,
    SketchedGaussianProcessRegressor,
    StructuredRandomProjection,
)
