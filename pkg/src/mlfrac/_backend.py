"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise, or
when ``MLFRAC_BACKEND=python``, the numpy fallback is used.
"""

from __future__ import annotations

import os
from types import ModuleType

from mlfrac import _fallback


def _load_compiled() -> ModuleType | None:
    try:
        from mlfrac import _kernels
    except ImportError:
        return None
    return _kernels


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name is None:
        name = os.environ.get("MLFRAC_BACKEND", "auto").lower()
    if name == "python":
        return _fallback
    compiled = _load_compiled()
    if name == "cython" and compiled is None:
        raise ImportError("mlfrac._kernels is not built; run `pip install -e . --no-build-isolation`")
    return compiled if compiled is not None else _fallback


kernels = get_backend()
BACKEND = kernels.NAME
