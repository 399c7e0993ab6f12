"""Pure-numpy implementations of the 1-D convolution kernels.

Conventions shared with the compiled backend:
  x  : (batch, time, in_channels)
  w  : (out_channels, in_channels, kernel) for conv,
       (in_channels, out_channels, kernel) for transposed conv
  b  : (out_channels,)
Valid convolution only (no padding); stride >= 1.  dtype of the inputs is
preserved (float32 or float64).  Everything reduces to plain matmuls so
BLAS carries the heavy shapes.
"""

import numpy as np


def _windows(x, ksize, stride):
    """(batch, t_out, c_in, ksize) strided view of the conv input."""
    return np.lib.stride_tricks.sliding_window_view(x, ksize, axis=1)[:, ::stride]


def conv1d_forward(x, w, b, stride):
    c_out, c_in, ksize = w.shape
    cols = _windows(x, ksize, stride)
    batch, t_out = cols.shape[:2]
    # C-order flatten of (c_in, ksize) matches w's trailing axes
    flat = cols.reshape(batch * t_out, c_in * ksize)
    y = flat @ w.reshape(c_out, c_in * ksize).T
    y += b
    return y.reshape(batch, t_out, c_out)


def conv1d_backward(x, w, stride, gy):
    c_out, c_in, ksize = w.shape
    batch, t_out = gy.shape[:2]
    cols = _windows(x, ksize, stride)
    flat_cols = cols.reshape(batch * t_out, c_in * ksize)
    flat_gy = gy.reshape(batch * t_out, c_out)
    gb = gy.sum(axis=(0, 1))
    gw = (flat_gy.T @ flat_cols).reshape(c_out, c_in, ksize)
    gcols = (flat_gy @ w.reshape(c_out, c_in * ksize)).reshape(
        batch, t_out, c_in, ksize
    )
    gx = np.zeros_like(x)
    starts = stride * np.arange(t_out)
    for k in range(ksize):
        # for fixed k the target positions are distinct, so += is safe
        gx[:, starts + k, :] += gcols[:, :, :, k]
    return gx, gw, gb


def deconv1d_forward(x, w, b, stride):
    batch, t_in, _ = x.shape
    c_out, ksize = w.shape[1], w.shape[2]
    t_out = (t_in - 1) * stride + ksize
    y = np.zeros((batch, t_out, c_out), dtype=x.dtype)
    starts = stride * np.arange(t_in)
    for k in range(ksize):
        y[:, starts + k, :] += x @ w[:, :, k]
    y += b
    return y


def deconv1d_backward(x, w, stride, gy):
    batch, t_in, c_in = x.shape
    c_out, ksize = w.shape[1], w.shape[2]
    starts = stride * np.arange(t_in)
    flat_x = x.reshape(batch * t_in, c_in)
    gb = gy.sum(axis=(0, 1))
    gw = np.empty_like(w)
    gx = np.zeros_like(x)
    for k in range(ksize):
        gy_k = gy[:, starts + k, :]  # (batch, t_in, c_out)
        gw[:, :, k] = flat_x.T @ gy_k.reshape(batch * t_in, c_out)
        gx += gy_k @ w[:, :, k].T
    return gx, gw, gb
