"""Kernel backend selection.

The compiled extension is used when present; otherwise the numpy fallback.
Set VIZPIPE_KERNELS=cython|numpy to force a backend (forcing cython raises
if the extension is not built).
"""

from __future__ import annotations

import os

_forced = os.environ.get("VIZPIPE_KERNELS")

if _forced == "numpy":
    from vizpipe.cnn import kernels_numpy as _impl

    BACKEND = "numpy"
elif _forced == "cython":
    from vizpipe.cnn import _convext as _impl  # type: ignore[no-redef]

    BACKEND = "cython"
else:
    try:
        from vizpipe.cnn import _convext as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from vizpipe.cnn import kernels_numpy as _impl

        BACKEND = "numpy"

conv2d = _impl.conv2d
conv2d_grad = _impl.conv2d_grad
maxpool2d = _impl.maxpool2d
maxpool2d_grad = _impl.maxpool2d_grad


def active_backend() -> str:
    return BACKEND
