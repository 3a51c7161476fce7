"""Reproducible chunked Monte Carlo.

Samples are split into fixed-size chunks, each with its own child stream
spawned from one :class:`numpy.random.SeedSequence`. Chunk boundaries do
not depend on the number of worker threads, and partial sums are merged in
chunk order, so results are bit-identical for a given seed whatever
``MLFRAC_THREADS`` is.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

CHUNK = 1 << 16


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean of a complex quantity with component standard errors."""

    estimate: complex
    std_error_re: float
    std_error_im: float
    samples: int
    seed: int | None = None

    @property
    def std_error(self) -> float:
        return math.hypot(self.std_error_re, self.std_error_im)

    def within(self, reference: complex, k: float = 3.0) -> bool:
        """Both components within ``k`` standard errors of ``reference``.

        A component with zero spread must match to rounding.
        """
        ref = complex(reference)
        tol_re = max(k * self.std_error_re, 1e-12 * max(1.0, abs(ref)))
        tol_im = max(k * self.std_error_im, 1e-12 * max(1.0, abs(ref)))
        return abs(self.estimate.real - ref.real) <= tol_re and abs(self.estimate.imag - ref.imag) <= tol_im


def max_threads() -> int:
    env = os.environ.get("MLFRAC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"MLFRAC_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _partial(draw: Callable, ss: np.random.SeedSequence, size: int):
    v = np.asarray(draw(np.random.default_rng(ss), size), dtype=np.complex128)
    if v.shape != (size,):
        raise ValueError(f"draw returned shape {v.shape}, expected ({size},)")
    return v.sum(), float(np.sum(v.real**2)), float(np.sum(v.imag**2))


def monte_carlo(draw: Callable, samples: int, seed=None, chunk: int = CHUNK,
                threads: int | None = None) -> MCEstimate:
    """Mean of ``draw(rng, size)`` over ``samples`` draws.

    ``draw`` must return ``size`` complex values computed from ``rng`` only.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    ss = seed_sequence(seed)
    nchunks = -(-samples // chunk)
    sizes = [chunk] * (nchunks - 1) + [samples - chunk * (nchunks - 1)]
    children = ss.spawn(nchunks)
    workers = min(threads or max_threads(), nchunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _partial(draw, *a), zip(children, sizes)))
    else:
        parts = [_partial(draw, c, n) for c, n in zip(children, sizes)]
    total = 0j
    sq_re = sq_im = 0.0
    for s, a, b in parts:
        total += s
        sq_re += a
        sq_im += b
    n = samples
    mean = total / n
    if n > 1:
        var_re = max(sq_re - n * mean.real**2, 0.0) / (n - 1)
        var_im = max(sq_im - n * mean.imag**2, 0.0) / (n - 1)
    else:
        var_re = var_im = 0.0
    entropy = ss.entropy if isinstance(ss.entropy, int) else None
    return MCEstimate(complex(mean), math.sqrt(var_re / n), math.sqrt(var_im / n), n, entropy)
