"""Selects the kernel implementation at import time.

The compiled extension is used when it imports; otherwise, or when
``WEIBULL_GOF_BACKEND=python`` is set, the numpy fallback takes over.  Both
expose the same functions.
"""

import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _fallback}
if _core is not None:
    _BACKENDS["compiled"] = _core


def get(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return kernels
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(_BACKENDS)}") from None


def available():
    return sorted(_BACKENDS)


def thread_count():
    """Worker cap from ``GOF_THREADS`` (0 or unset lets OpenMP decide)."""
    raw = os.environ.get("GOF_THREADS", "0").strip() or "0"
    value = int(raw)
    if value < 0:
        raise ValueError("GOF_THREADS must be >= 0")
    return value


_requested = os.environ.get("WEIBULL_GOF_BACKEND", "").strip().lower()
if _requested:
    kernels = get(_requested)
else:
    kernels = _core if _core is not None else _fallback
BACKEND = "compiled" if kernels is _core else "python"
