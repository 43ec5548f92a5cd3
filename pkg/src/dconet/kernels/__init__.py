"""Kernel backend selection.

The compiled extension (``_ckern``) is used when it imported cleanly; the
numpy fallback (``pykern``) is always available.  Set DCONET_KERNELS=python
to force the fallback, DCONET_KERNELS=cython to require the extension.
"""

import os

_choice = os.environ.get("DCONET_KERNELS", "").strip().lower()

if _choice in ("python", "py", "numpy"):
    from . import pykern as _impl

    BACKEND = "python"
elif _choice in ("cython", "c", "compiled"):
    from . import _ckern as _impl  # noqa: F401  (raises if not built)

    BACKEND = "cython"
else:
    try:
        from . import _ckern as _impl

        BACKEND = "cython"
    except ImportError:
        from . import pykern as _impl

        BACKEND = "python"

tanh_backward = _impl.tanh_backward
square_backward = _impl.square_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
adam_update = _impl.adam_update
points_in_polygon = _impl.points_in_polygon

__all__ = [
    "BACKEND",
    "tanh_backward",
    "square_backward",
    "maxpool_forward",
    "maxpool_backward",
    "adam_update",
    "points_in_polygon",
]
