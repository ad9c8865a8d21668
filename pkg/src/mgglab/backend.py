"""Kernel backend selection.

Hot numeric loops exist in two functionally identical implementations:
a numba @njit one (``mgglab.kernels.nb``) and a vectorized pure-numpy one
(``mgglab.kernels.pure``).  Both consume pre-drawn random arrays, so given
the same inputs they return bit-identical outputs.

The active backend is chosen once at import time from the environment
variable ``MGG_BACKEND``:

* ``auto`` (default): numba if it imports, else numpy
* ``numba``: require numba, raise if unavailable
* ``numpy``: force the pure-numpy path
"""

import os

_VALID = ("auto", "numba", "numpy")


def _resolve() -> str:
    req = os.environ.get("MGG_BACKEND", "auto").lower()
    if req not in _VALID:
        raise ValueError(f"MGG_BACKEND must be one of {_VALID}, got {req!r}")
    if req == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if req == "numba":
            raise
        return "numpy"


ACTIVE = _resolve()


def using_numba() -> bool:
    return ACTIVE == "numba"
