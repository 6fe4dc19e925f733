"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the numpy
versions in ``_kernels_py`` are used. Set ``EXPERTSEL_PURE=1`` to force the
fallback. Both backends return identical products per cell; sums may differ
in the last bits because the summation order differs.
"""

import os

from . import _kernels_py

if os.environ.get("EXPERTSEL_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

score_candidates = _impl.score_candidates


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
