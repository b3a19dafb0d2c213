"""Blocked tall-skinny QR (TSQR).

A tall ``n x r`` matrix is split into contiguous row blocks which are
factored independently; their ``R`` factors are then reduced to one
``r x r`` triangle either pairwise through a binary tree or along one or
more sequential chains.  ``Q`` is never formed: it is kept as the set of
small Householder factorizations in the reduction graph and is applied by
replaying that graph forwards (``Q^T``) or backwards (``Q``).
"""

from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _householder
from .exceptions import SingularMatrixError

TREE = "tree"
SEQUENTIAL = "sequential"
_SCHEME_ALIASES = {"tree": TREE, "sequential": SEQUENTIAL, "seq": SEQUENTIAL}

__all__ = [
    "HouseholderQR",
    "TsqrFactors",
    "householder_qr",
    "explicit_q",
    "default_num_blocks",
    "tsqr_factor",
    "apply_qt",
    "apply_q",
    "back_substitute",
]


class HouseholderQR(NamedTuple):
    """Compact Householder factorization ``A = Q R`` of a p x r block."""

    V: np.ndarray
    tau: np.ndarray
    R: np.ndarray


def _as_float_matrix(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(A)


def householder_qr(block):
    """Householder QR of a ``p x r`` block with ``p >= r``.

    The diagonal of ``R`` is nonnegative; entries below it are exactly zero.
    """
    block = _as_float_matrix(block, "block")
    p, r = block.shape
    if r < 1 or p < r:
        raise ValueError(f"householder_qr needs p >= r >= 1, got shape {block.shape}")
    return HouseholderQR(*_householder.geqr(block))


def explicit_q(qr):
    """Materialize the thin ``p x r`` orthonormal factor of a HouseholderQR."""
    p, r = qr.V.shape
    E = np.zeros((p, r))
    E[np.arange(r), np.arange(r)] = 1.0
    return _householder.apply_q(qr.V, qr.tau, E)


def default_num_blocks(n, r):
    """``floor(n / 2r) + 1`` blocks, capped so no block has fewer than r rows."""
    return max(1, min(n // (2 * r) + 1, n // r))


@dataclass(frozen=True)
class _Node:
    # parts are ("rows", start, stop) or ("node", index, None), stacked in order
    parts: tuple
    qr: HouseholderQR


@dataclass(frozen=True)
class TsqrFactors:
    """Implicit ``Q`` and explicit ``R`` of a blocked QR factorization.

    Attributes
    ----------
    n, r : int
        Shape of the factored matrix.
    scheme : str
        ``"tree"`` or ``"sequential"``.
    block_row_ranges : tuple of (start, stop)
        The contiguous row partition used at the first level.
    nodes : tuple
        Small factorizations of the reduction graph, children before parents.
    levels : tuple of tuple of int
        Node indices grouped into stages whose nodes are mutually independent.
    final_R : ndarray, shape (r, r)
        Upper triangular with nonnegative diagonal.
    """

    n: int
    r: int
    scheme: str
    chains: int
    block_row_ranges: tuple
    nodes: tuple
    levels: tuple
    final_R: np.ndarray

    @property
    def num_blocks(self):
        return len(self.block_row_ranges)

    @property
    def root(self):
        return len(self.nodes) - 1


@contextmanager
def _pool(workers):
    if isinstance(workers, Executor):
        yield workers
        return
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=workers) as ex:
        yield ex


def _map(pool, fn, items):
    if pool is None:
        return [fn(item) for item in items]
    return list(pool.map(fn, items))


def _row_ranges(n, b):
    base, extra = divmod(n, b)
    ranges = []
    start = 0
    for i in range(b):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return ranges


def _tree_plan(ranges):
    """Return (parts per node, levels) for the pairwise reduction tree."""
    parts = [(("rows", a, b),) for a, b in ranges]
    levels = [list(range(len(ranges)))]
    current = list(range(len(ranges)))
    while len(current) > 1:
        nxt, stage = [], []
        for i in range(0, len(current) - 1, 2):
            parts.append((("node", current[i], None), ("node", current[i + 1], None)))
            nxt.append(len(parts) - 1)
            stage.append(len(parts) - 1)
        if len(current) % 2:
            nxt.append(current[-1])
        levels.append(stage)
        current = nxt
    return parts, levels


def _sequential_plan(ranges, chains):
    groups = [g for g in np.array_split(np.arange(len(ranges)), chains)]
    parts = []
    tails = []
    steps = {}
    for group in groups:
        prev = None
        for step, blk in enumerate(group):
            a, b = ranges[blk]
            if prev is None:
                parts.append((("rows", a, b),))
            else:
                parts.append((("node", prev, None), ("rows", a, b)))
            prev = len(parts) - 1
            steps.setdefault(step, []).append(prev)
        tails.append(prev)
    levels = [steps[s] for s in sorted(steps)]
    if chains > 1:
        parts.append(tuple(("node", t, None) for t in tails))
        levels.append([len(parts) - 1])
    return parts, levels


def _stack(parts, A, results):
    pieces = [A[p[1]:p[2]] if p[0] == "rows" else results[p[1]] for p in parts]
    return pieces[0] if len(pieces) == 1 else np.vstack(pieces)


def tsqr_factor(A, num_blocks=None, scheme=TREE, chains=1, workers=1):
    """Blocked QR factorization of a tall matrix.

    Parameters
    ----------
    A : array-like, shape (n, r)
        Tall matrix, ``n >= r``.
    num_blocks : int, optional
        Number of contiguous row blocks ``b``; must satisfy ``b <= n // r``.
        Defaults to ``floor(n / 2r) + 1`` (capped at ``n // r``).
    scheme : {"tree", "sequential"}
        Pairwise tree reduction, or chained ``[R; K_next]`` factorizations.
    chains : int
        Number of independent sequential chains merged by a final QR
        (sequential scheme only).
    workers : int or concurrent.futures.Executor
        Worker threads; the reduction topology and hence the result do not
        depend on it.

    Returns
    -------
    TsqrFactors
    """
    A = _as_float_matrix(A)
    n, r = A.shape
    if r < 1 or n < r:
        raise ValueError(f"tsqr_factor needs a tall matrix (n >= r >= 1), got {A.shape}")
    scheme_name = _SCHEME_ALIASES.get(str(scheme).lower())
    if scheme_name is None:
        raise ValueError(f"unknown scheme {scheme!r}; use 'tree' or 'sequential'")
    b = default_num_blocks(n, r) if num_blocks is None else int(num_blocks)
    if b < 1 or b > n // r:
        raise ValueError(f"num_blocks must be in [1, {n // r}] for shape {A.shape}, got {b}")
    chains = int(chains)
    if scheme_name == SEQUENTIAL and not 1 <= chains <= b:
        raise ValueError(f"chains must be in [1, {b}], got {chains}")
    if scheme_name == TREE:
        chains = 1

    ranges = _row_ranges(n, b)
    if scheme_name == TREE:
        plan, levels = _tree_plan(ranges)
    else:
        plan, levels = _sequential_plan(ranges, chains)

    qrs = [None] * len(plan)
    results = {}

    def factor(idx):
        return _householder.geqr(np.ascontiguousarray(_stack(plan[idx], A, results)))

    with _pool(workers) as pool:
        for stage in levels:
            for idx, res in zip(stage, _map(pool, factor, stage)):
                qrs[idx] = HouseholderQR(*res)
                results[idx] = qrs[idx].R

    nodes = tuple(_Node(plan[i], qrs[i]) for i in range(len(plan)))
    return TsqrFactors(
        n=n,
        r=r,
        scheme=scheme_name,
        chains=chains,
        block_row_ranges=tuple(ranges),
        nodes=nodes,
        levels=tuple(tuple(s) for s in levels),
        final_R=qrs[-1].R,
    )


def _as_rhs(X, rows, name):
    X = np.asarray(X, dtype=float)
    vector = X.ndim == 1
    if vector:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got shape {X.shape}")
    return np.ascontiguousarray(X), vector


def apply_qt(factors, X, workers=1):
    """``Q^T X`` (r x m) for the implicit thin Q of ``factors``; X is n x m."""
    X, vector = _as_rhs(X, factors.n, "X")
    r = factors.r
    results = {}

    def reduce(idx):
        node = factors.nodes[idx]
        stacked = np.ascontiguousarray(_stack(node.parts, X, results))
        return _householder.apply_qt(node.qr.V, node.qr.tau, stacked)[:r]

    with _pool(workers) as pool:
        for stage in factors.levels:
            for idx, res in zip(stage, _map(pool, reduce, stage)):
                results[idx] = res
    out = results[factors.root]
    return out[:, 0] if vector else out


def apply_q(factors, Y, workers=1):
    """``Q Y`` (n x m) for the implicit thin Q of ``factors``; Y is r x m."""
    Y, vector = _as_rhs(Y, factors.r, "Y")
    r, m = factors.r, Y.shape[1]
    out = np.zeros((factors.n, m))
    incoming = {factors.root: Y}

    def expand(idx):
        node = factors.nodes[idx]
        p = node.qr.V.shape[0]
        full = np.zeros((p, m))
        full[:r] = incoming.pop(idx)
        return _householder.apply_q(node.qr.V, node.qr.tau, full)

    with _pool(workers) as pool:
        for stage in reversed(factors.levels):
            for idx, full in zip(stage, _map(pool, expand, stage)):
                offset = 0
                for part in factors.nodes[idx].parts:
                    if part[0] == "rows":
                        size = part[2] - part[1]
                        out[part[1]:part[2]] = full[offset:offset + size]
                    else:
                        size = r
                        incoming[part[1]] = full[offset:offset + size]
                    offset += size
    return out[:, 0] if vector else out


def singular_tolerance(R):
    return 1e-12 * float(np.max(np.abs(np.diag(R)))) if R.size else 0.0


def back_substitute(R, B):
    """Solve ``R X = B`` for upper triangular ``R`` by backward substitution.

    Raises
    ------
    SingularMatrixError
        If some ``|R[i, i]| <= 1e-12 * max|diag(R)|``.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"R must be square, got shape {R.shape}")
    if np.any(np.tril(R, -1) != 0):
        raise ValueError("R must be upper triangular")
    r = R.shape[0]
    B, vector = _as_rhs(B, r, "B")
    diag = np.diag(R)
    tol = singular_tolerance(R)
    bad = np.flatnonzero(np.abs(diag) <= tol)
    if bad.size:
        raise SingularMatrixError(int(bad[0]), float(diag[bad[0]]), tol)
    X = np.empty_like(B)
    for i in range(r - 1, -1, -1):
        X[i] = (B[i] - R[i, i + 1:] @ X[i + 1:]) / R[i, i]
    return X[:, 0] if vector else X
