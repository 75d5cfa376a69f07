"""Selects the compiled kernel core when it is importable.

Set ``GPOPT_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from gpopt import _pykernels

try:
    if os.environ.get("GPOPT_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from gpopt import _ckernels as kernels
    BACKEND = "cython"
except ImportError:
    kernels = _pykernels
    BACKEND = "python"

__all__ = ["BACKEND", "kernels"]
