"""Twin compute kernels.

``nb`` holds numba-compiled kernels, ``pure`` the vectorized numpy
equivalents.  Both are deterministic functions of their array inputs
(randomness is always drawn by the caller), so the two backends agree
on every output.  ``impl`` is the active one per mgglab.backend.
"""

from .. import backend

if backend.using_numba():
    from . import nb as impl
else:
    from . import pure as impl

__all__ = ["impl"]
