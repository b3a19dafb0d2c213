"""Wall-clock scaling of the sketch + TSQR pipeline over worker counts."""

from concurrent.futures import ThreadPoolExecutor
import hashlib
import statistics
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import _rng
from .kernels import GramRows, KernelSpec, equispaced_grid
from .transforms import apply_sketch, build_sketch
from .tsqr import default_num_blocks, tsqr_factor

STAGES = ("pipeline", "tsqr")


def r_checksum(R):
    """Short digest of the exact bytes of a triangular factor."""
    return hashlib.sha256(np.ascontiguousarray(R).tobytes()).hexdigest()[:16]


def _timed(fn, repeats):
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def speedup_rows(n_values, r, workers_list, stage="pipeline", sketch="dct", num_blocks=None,
                 scheme="tree", repeats=3, seed=0, spec=None):
    """Yield one dict per ``(n, workers)`` cell.

    Only the compute call is timed; building inputs and starting the thread
    pool happen outside the clock.  BLAS is pinned to one thread so the
    worker count is the only source of parallelism.

    ``pipeline`` sketches an implicit Gram matrix (rows generated on demand)
    and factors the result; ``tsqr`` factors a seeded Gaussian tall matrix.
    """
    if stage not in STAGES:
        raise ValueError(f"stage must be one of {STAGES}, got {stage!r}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    workers_list = sorted(set(int(w) for w in workers_list) | {1})
    spec = spec or KernelSpec.squared_exponential(1.0, 10.0)
    for n in n_values:
        b = default_num_blocks(n, r) if num_blocks is None else num_blocks
        if stage == "tsqr":
            A = _rng.make_rng(seed).standard_normal((n, r))
            sk = None
        else:
            K = GramRows(spec, equispaced_grid(n))
            sk = build_sketch(n, r, sketch, seed)
        base = None
        for w in workers_list:
            pool = ThreadPoolExecutor(max_workers=w) if w > 1 else None
            try:
                workers = pool if pool is not None else 1
                if stage == "tsqr":
                    def run():
                        return tsqr_factor(A, b, scheme, workers=workers)
                else:
                    def run():
                        return tsqr_factor(apply_sketch(K, sk, workers), b, scheme, workers=workers)
                with threadpool_limits(limits=1):
                    run()  # warm-up: JIT compilation and caches
                    seconds, factors = _timed(run, repeats)
            finally:
                if pool is not None:
                    pool.shutdown()
            if base is None:
                base = seconds
            yield {
                "n": n,
                "r": r,
                "blocks": b,
                "stage": stage,
                "sketch": sketch if stage == "pipeline" else "none",
                "workers": w,
                "median_seconds": seconds,
                "efficiency": base / seconds,
                "r_checksum": r_checksum(factors.final_R),
            }
