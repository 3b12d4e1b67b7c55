"""Kernel backend selection.

The compiled extension (`subsevo._kernels._native`) is preferred when it
imported cleanly; otherwise the numpy fallback is used. Override with the
environment variable SUBSEVO_KERNELS=auto|native|numpy (read once, at import).

`benchmarks/kernel_benchmark.py` compares the two backends head to head.
"""

import os

from . import _fallback

_requested = os.environ.get("SUBSEVO_KERNELS", "auto").lower()
if _requested not in ("auto", "native", "numpy"):
    raise RuntimeError(
        f"SUBSEVO_KERNELS must be auto, native or numpy, got {_requested!r}")

if _requested == "numpy":
    _impl = _fallback
else:
    try:
        from . import _native as _impl
    except ImportError:
        if _requested == "native":
            raise
        _impl = _fallback

BACKEND = "native" if _impl is not _fallback else "numpy"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward


def available_backends():
    """Importable backend modules keyed by name."""
    backends = {"numpy": _fallback}
    try:
        from . import _native
        backends["native"] = _native
    except ImportError:
        pass
    return backends
