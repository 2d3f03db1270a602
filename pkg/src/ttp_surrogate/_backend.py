"""Kernel backend selection.

The compiled extension is preferred; set ``TTP_SURROGATE_PURE=1`` to force
the pure-Python kernels (useful for debugging and for the backend benchmark).
"""

import os

from . import _purepy

if os.environ.get("TTP_SURROGATE_PURE", "") not in ("", "0"):
    kernels = _purepy
else:
    try:
        from . import _core as kernels
    except ImportError:  # extension not built
        kernels = _purepy

BACKEND = kernels.BACKEND
