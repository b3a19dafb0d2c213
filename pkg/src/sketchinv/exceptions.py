"""Exceptions raised by sketchinv."""

import numpy as np


class SingularMatrixError(np.linalg.LinAlgError):
    """A triangular factor has a (numerically) zero diagonal entry.

    Attributes
    ----------
    index : int
        Position of the first offending diagonal entry.
    """

    def __init__(self, index, value, tol):
        self.index = index
        self.value = value
        self.tol = tol
        super().__init__(
            f"singular triangular matrix: |R[{index}, {index}]| = {abs(value):.3e} "
            f"<= tolerance {tol:.3e}"
        )


class ConvergenceError(RuntimeError):
    """An iterative method did not reach its tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
