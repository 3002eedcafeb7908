"""Hot-kernel backend selection.

Prefers the compiled Cython extension when it imported cleanly; falls
back to the numpy implementation otherwise. ``UVTC_KERNEL_BACKEND``
(``compiled`` | ``python``) forces a choice, which the tests use to
check the two backends agree bit-for-bit.
"""

import os

from . import _numpy

_forced = os.environ.get("UVTC_KERNEL_BACKEND")

if _forced == "python":
    _impl = _numpy
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _numpy

BACKEND = _impl.BACKEND
warp_bilinear = _impl.warp_bilinear
warp_bilinear_grad = _impl.warp_bilinear_grad
segment_sum = _impl.segment_sum
