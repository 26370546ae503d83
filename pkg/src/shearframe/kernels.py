"""Backend selection for the transition-function kernel.

The compiled extension is used when it imports; otherwise the numpy
fallback. Setting ``SHEARFRAME_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _nu_fallback

nu_fill_python = _nu_fallback.nu_fill

try:
    from ._nu_kernel import nu_fill as nu_fill_compiled
except ImportError:  # extension not built
    nu_fill_compiled = None

if nu_fill_compiled is not None and os.environ.get("SHEARFRAME_PURE_PYTHON", "") not in ("1", "true"):
    nu_fill = nu_fill_compiled
    BACKEND = "cython"
else:
    nu_fill = nu_fill_python
    BACKEND = "numpy"

__all__ = ["nu_fill", "nu_fill_python", "nu_fill_compiled", "BACKEND"]
