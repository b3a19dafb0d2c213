"""Random sketching matrices and the fast orthogonal transforms behind them.

A structured sketch is ``Omega = diag(signs) @ M.T[:, selected]`` where ``M``
is an orthonormal transform matrix (``fast_transform(kind, v) == M @ v``).
Its columns are orthonormal, so no extra scaling is needed.  ``K @ Omega`` is
computed row by row as ``(M @ (signs * k_i))[selected]`` without ever forming
``Omega``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _rng
from .tsqr import _map, _pool

WHT = "wht"
DCT = "dct"
DHT = "dht"
GAUSSIAN = "gaussian"
STRUCTURED_KINDS = (WHT, DCT, DHT)
SKETCH_KINDS = (GAUSSIAN, WHT, DCT, DHT)

# Row chunk for sketch application.  Fixed so the arithmetic performed on each
# row never depends on the worker count.
CHUNK_ROWS = 64

__all__ = [
    "StructuredSketch",
    "GaussianSketch",
    "is_power_of_two",
    "fast_transform",
    "transform_matrix",
    "build_structured",
    "build_gaussian",
    "build_sketch",
    "materialize",
    "sketch_apply",
    "gaussian_apply",
    "apply_sketch",
]


def is_power_of_two(n):
    n = int(n)
    return n >= 1 and (n & (n - 1)) == 0


def _check_kind(kind):
    kind = str(kind).lower()
    if kind not in STRUCTURED_KINDS:
        raise ValueError(f"unknown transform kind {kind!r}; use one of {STRUCTURED_KINDS}")
    return kind


@lru_cache(maxsize=32)
def _bitrev(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx = idx >> 1
    return rev


@lru_cache(maxsize=256)
def _twiddles(h):
    return np.exp(-1j * np.pi * np.arange(h) / h)


def _fft(x):
    """Unnormalized radix-2 DFT along the last axis of a 2-D complex array."""
    m, n = x.shape
    y = x[:, _bitrev(n)]
    h = 1
    while h < n:
        y = y.reshape(m, n // (2 * h), 2, h)
        a = y[:, :, 0, :]
        t = y[:, :, 1, :] * _twiddles(h)
        y = np.stack((a + t, a - t), axis=2).reshape(m, n)
        h *= 2
    return y


def _fwht(x):
    m, n = x.shape
    y = x
    h = 1
    while h < n:
        y = y.reshape(m, n // (2 * h), 2, h)
        a = y[:, :, 0, :]
        b = y[:, :, 1, :]
        y = np.stack((a + b, a - b), axis=2).reshape(m, n)
        h *= 2
    return y / np.sqrt(n)


@lru_cache(maxsize=64)
def _dct_phase(n):
    k = np.arange(n)
    scale = np.full(n, np.sqrt(2.0 / n))
    scale[0] = np.sqrt(1.0 / n)
    return np.exp(-1j * np.pi * k / (2 * n)), scale


def _dct_fast(x):
    n = x.shape[1]
    u = np.concatenate((x[:, 0::2], x[:, 1::2][:, ::-1]), axis=1)
    phase, scale = _dct_phase(n)
    return (_fft(u.astype(complex)) * phase).real * scale


def _dht_fast(x):
    n = x.shape[1]
    F = _fft(x.astype(complex))
    return (F.real - F.imag) / np.sqrt(n)


def transform_matrix(kind, n):
    """Explicit orthonormal ``M`` with ``fast_transform(kind, v) == M @ v``.

    WHT is the Sylvester-ordered Hadamard matrix over ``sqrt(n)``; DCT is the
    orthonormal type-II DCT; DHT is ``cas(2 pi j k / n) / sqrt(n)``.
    """
    kind = _check_kind(kind)
    n = int(n)
    if n < 1:
        raise ValueError(f"transform length must be >= 1, got {n}")
    if kind == WHT:
        if not is_power_of_two(n):
            raise ValueError(f"Walsh-Hadamard transform needs a power-of-2 length, got {n}")
        H = np.ones((1, 1))
        while H.shape[0] < n:
            H = np.block([[H, H], [H, -H]])
        return H / np.sqrt(n)
    j = np.arange(n)
    k = j.reshape(-1, 1)
    if kind == DCT:
        M = np.cos(np.pi * (((2 * j + 1) * k) % (4 * n)) / (2 * n)) * np.sqrt(2.0 / n)
        M[0] = np.sqrt(1.0 / n)
        return M
    ang = 2 * np.pi * ((j * k) % n) / n
    return (np.cos(ang) + np.sin(ang)) / np.sqrt(n)


@lru_cache(maxsize=8)
def _cached_matrix(kind, n):
    return transform_matrix(kind, n)


def fast_transform(kind, v):
    """Apply the orthonormal transform to a vector, or to each row of a 2-D array.

    ``O(n log n)`` for power-of-2 lengths; DCT and DHT fall back to a direct
    ``O(n^2)`` product otherwise.  WHT rejects other lengths.
    """
    kind = _check_kind(kind)
    v = np.asarray(v, dtype=float)
    vector = v.ndim == 1
    x = v.reshape(1, -1) if vector else v
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"expected a vector or 2-D array, got shape {v.shape}")
    n = x.shape[1]
    if is_power_of_two(n):
        if kind == WHT:
            y = _fwht(x)
        elif kind == DCT:
            y = _dct_fast(x)
        else:
            y = _dht_fast(x)
    elif kind == WHT:
        raise ValueError(f"Walsh-Hadamard transform needs a power-of-2 length, got {n}")
    else:
        y = x @ _cached_matrix(kind, n).T
    return y[0] if vector else y


@dataclass(frozen=True, eq=False)
class StructuredSketch:
    """Implicit ``n x r`` sketch ``Omega = scale * diag(signs) @ M.T[:, selected]``."""

    n: int
    r: int
    kind: str
    signs: np.ndarray
    selected: np.ndarray
    scale: float = 1.0
    seed: int = None


@dataclass(frozen=True, eq=False)
class GaussianSketch:
    """Dense ``n x r`` sketch of i.i.d. ``N(0, 1/r)`` entries."""

    n: int
    r: int
    entries: np.ndarray
    seed: int = None

    kind = GAUSSIAN


def _check_dims(n, r):
    n, r = int(n), int(r)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1 <= r <= n:
        raise ValueError(f"sketch size r must satisfy 1 <= r <= n = {n}, got {r}")
    return n, r


def build_structured(n, r, kind, seed):
    """Draw Rademacher signs and ``r`` sorted columns sampled without replacement."""
    n, r = _check_dims(n, r)
    kind = _check_kind(kind)
    if kind == WHT and not is_power_of_two(n):
        raise ValueError(f"WHT sketch needs a power-of-2 n, got {n}")
    rng = _rng.make_rng(seed)
    signs = rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    selected = np.sort(rng.choice(n, size=r, replace=False)).astype(np.intp)
    signs.flags.writeable = False
    selected.flags.writeable = False
    return StructuredSketch(n, r, kind, signs, selected, 1.0, int(seed))


def build_gaussian(n, r, seed):
    n, r = _check_dims(n, r)
    entries = _rng.make_rng(seed).standard_normal((n, r)) / np.sqrt(r)
    entries.flags.writeable = False
    return GaussianSketch(n, r, entries, int(seed))


def build_sketch(n, r, kind, seed):
    kind = str(kind).lower()
    if kind == GAUSSIAN:
        return build_gaussian(n, r, seed)
    return build_structured(n, r, kind, seed)


def materialize(sketch):
    """Dense ``n x r`` matrix of a sketch, built from the explicit transform matrix."""
    if isinstance(sketch, GaussianSketch):
        return np.array(sketch.entries)
    M = transform_matrix(sketch.kind, sketch.n)
    return sketch.scale * sketch.signs[:, None] * M.T[:, sketch.selected]


def _row_source(K, n_cols):
    """Return (n_rows, fetch(start, stop)) for a dense array or a row provider."""
    if hasattr(K, "rows") and hasattr(K, "shape"):
        rows, cols = K.shape
        fetch = K.rows
    else:
        K = np.asarray(K, dtype=float)
        if K.ndim != 2:
            raise ValueError(f"K must be a 2-D array, got shape {K.shape}")
        rows, cols = K.shape

        def fetch(a, b):
            return K[a:b]

    if cols != n_cols:
        raise ValueError(f"K has {cols} columns but the sketch expects n = {n_cols}")
    return rows, fetch


def _chunked(rows, fn, workers, out_cols):
    chunks = [(a, min(a + CHUNK_ROWS, rows)) for a in range(0, rows, CHUNK_ROWS)]
    out = np.empty((rows, out_cols))
    with _pool(workers) as pool:
        for (a, b), block in zip(chunks, _map(pool, fn, chunks)):
            out[a:b] = block
    return out


def sketch_apply(K, sketch, workers=1):
    """``K @ Omega`` for a structured sketch, one row at a time.

    ``K`` may be a dense ``(m, n)`` array or any object exposing ``shape`` and
    ``rows(start, stop)`` (for matrices too large to hold in memory).
    """
    rows, fetch = _row_source(K, sketch.n)

    def one(span):
        block = np.asarray(fetch(*span), dtype=float) * sketch.signs
        return fast_transform(sketch.kind, block)[:, sketch.selected] * sketch.scale

    return _chunked(rows, one, workers, sketch.r)


def gaussian_apply(K, sketch, workers=1):
    """Dense product ``K @ Omega`` for a Gaussian sketch."""
    rows, fetch = _row_source(K, sketch.n)

    def one(span):
        return np.asarray(fetch(*span), dtype=float) @ sketch.entries

    return _chunked(rows, one, workers, sketch.r)


def apply_sketch(K, sketch, workers=1):
    if isinstance(sketch, GaussianSketch):
        return gaussian_apply(K, sketch, workers)
    return sketch_apply(K, sketch, workers)
