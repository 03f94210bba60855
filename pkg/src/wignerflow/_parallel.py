"""Chunked thread-pool map for node-parallel kernels."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "WIGNERFLOW_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def map_nodes(func, x: np.ndarray, k: np.ndarray, threads: int | None = None,
              chunk: int = 4096) -> np.ndarray:
    """Apply a vectorized ``func(x, k)`` over flattened nodes in chunks.

    Chunks are independent; results are reassembled in input order, so the
    output does not depend on the thread count.
    """
    x, k = np.broadcast_arrays(np.asarray(x, float), np.asarray(k, float))
    shape = x.shape
    xf, kf = x.ravel(), k.ravel()
    bounds = [(i, min(i + chunk, xf.size)) for i in range(0, xf.size, chunk)]
    out = np.empty(xf.size)

    def run(b):
        lo, hi = b
        out[lo:hi] = func(xf[lo:hi], kf[lo:hi])

    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) <= 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, bounds))
    return out.reshape(shape)
