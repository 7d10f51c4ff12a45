"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python twin
is the fallback. Set PSSIM_PURE_PYTHON=1 to force the fallback (used by
the backend-equivalence tests and the benchmark).
"""

import os

if os.environ.get("PSSIM_PURE_PYTHON", "") == "1":
    from . import _loop as kernel

    BACKEND_NAME = "pure"
else:
    try:
        from . import _speedups as kernel  # type: ignore[attr-defined]

        BACKEND_NAME = "compiled"
    except ImportError:
        from . import _loop as kernel

        BACKEND_NAME = "pure"
