"""Kernel backend selection: compiled extension with pure-Python fallback.

The compiled module ``hardshift._kernels`` is preferred; the pure Python
twin ``hardshift._fallback`` implements the same API with bit-identical
results.  Set ``HARDSHIFT_FORCE_FALLBACK=1`` to force the Python backend
(used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os
import warnings

from . import _fallback


def _load():
    if os.environ.get("HARDSHIFT_FORCE_FALLBACK", "") == "1":
        return _fallback
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        warnings.warn(
            "compiled hardshift kernels unavailable; using the pure Python "
            "fallback (slow). Build with `pip install -e . --no-build-isolation`.",
            RuntimeWarning,
            stacklevel=2,
        )
        return _fallback


_active = _load()


def get_kernels(force: str | None = None):
    """Return the active kernel module.

    ``force`` may be "compiled" or "fallback" to bypass the default choice;
    requesting "compiled" when the extension is missing raises ImportError.
    """
    if force is None:
        return _active
    if force == "fallback":
        return _fallback
    if force == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {force!r}")


def backend_name() -> str:
    return "compiled" if _active.COMPILED else "fallback"
