"""Select the integration kernel backend at import time.

The compiled extension is used when present; the numpy fallback otherwise.
Set RESLAB_BACKEND=python to force the fallback (used by the benchmark and
by backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("RESLAB_BACKEND", "").lower() == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _compiled
        kernels = _compiled
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"


def backend_name() -> str:
    return BACKEND
