"""Per-thread mpmath contexts, so precision changes never leak between threads."""

from __future__ import annotations

import threading

import mpmath

_local = threading.local()


def context(dps: int) -> mpmath.ctx_mp.MPContext:
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def cache() -> dict:
    """Per-thread cache for values tied to this thread's context."""
    c = getattr(_local, "cache", None)
    if c is None or len(c) > 64:
        c = _local.cache = {}
    return c
