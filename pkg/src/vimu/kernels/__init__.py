"""Hot convolution kernels with a compiled core and a numpy fallback.

The compiled Cython extension is preferred when it has been built; otherwise
the numpy implementation is used.  Set ``VIMU_KERNELS`` to ``python`` or
``cython`` to force a backend (``cython`` raises if the extension is missing).
``BACKEND`` names the backend actually in use.

All functions preserve the dtype of their inputs (float32 or float64) and are
deterministic for a fixed backend.
"""

import os

import numpy as np

from ..errors import ConfigurationError

_requested = os.environ.get("VIMU_KERNELS", "auto")
if _requested not in ("auto", "cython", "python"):
    raise ConfigurationError(
        f"VIMU_KERNELS must be auto, cython or python, got {_requested!r}"
    )

if _requested in ("auto", "cython"):
    try:
        from . import _conv_cy as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _conv_py as _impl

        BACKEND = "python"
else:
    from . import _conv_py as _impl

    BACKEND = "python"


def _as3(a, name):
    a = np.ascontiguousarray(a)
    if a.ndim != 3:
        raise ConfigurationError(f"{name} must be 3-D, got shape {a.shape}")
    return a


def conv1d_forward(x, w, b, stride):
    """Valid strided conv along time: (B,T,Ci) x (Co,Ci,K) -> (B,To,Co)."""
    x, w = _as3(x, "x"), _as3(w, "w")
    return _impl.conv1d_forward(x, w, np.ascontiguousarray(b), stride)


def conv1d_backward(x, w, stride, gy):
    """Gradients of conv1d_forward: returns (gx, gw, gb)."""
    x, w, gy = _as3(x, "x"), _as3(w, "w"), _as3(gy, "gy")
    return _impl.conv1d_backward(x, w, stride, gy)


def deconv1d_forward(x, w, b, stride):
    """Transposed conv along time: (B,T,Ci) x (Ci,Co,K) -> (B,(T-1)*s+K,Co)."""
    x, w = _as3(x, "x"), _as3(w, "w")
    return _impl.deconv1d_forward(x, w, np.ascontiguousarray(b), stride)


def deconv1d_backward(x, w, stride, gy):
    """Gradients of deconv1d_forward: returns (gx, gw, gb)."""
    x, w, gy = _as3(x, "x"), _as3(w, "w"), _as3(gy, "gy")
    return _impl.deconv1d_backward(x, w, stride, gy)
