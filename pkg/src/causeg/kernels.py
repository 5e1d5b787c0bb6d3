"""Backend selection for the hot kernels.

The compiled extension is preferred. Setting ``CAUSEG_PURE_PYTHON=1`` in the
environment forces the NumPy fallback, which is also used automatically when
the extension was not built.
"""
import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("CAUSEG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

nearest_centroid = _impl.nearest_centroid
centroid_sums = _impl.centroid_sums
qini_prefix = _impl.qini_prefix


def backends():
    """Map of available backend name to kernel module."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
