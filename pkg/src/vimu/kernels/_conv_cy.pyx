# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1-D convolution kernels (same contracts as _conv_py).

Weights are re-laid-out per call so every inner loop runs over contiguous
memory; accumulation order is fixed, so results are deterministic.
"""

import numpy as np

cimport cython


ctypedef fused real:
    float
    double


cdef inline real _dot(const real* a, const real* b, Py_ssize_t n) noexcept nogil:
    cdef real acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0
    cdef Py_ssize_t i = 0, m = n - (n % 4)
    while i < m:
        acc0 = acc0 + a[i] * b[i]
        acc1 = acc1 + a[i + 1] * b[i + 1]
        acc2 = acc2 + a[i + 2] * b[i + 2]
        acc3 = acc3 + a[i + 3] * b[i + 3]
        i = i + 4
    while i < n:
        acc0 = acc0 + a[i] * b[i]
        i = i + 1
    return acc0 + acc1 + acc2 + acc3


cdef inline void _axpy(real g, const real* src, real* dst, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        dst[i] = dst[i] + g * src[i]


def conv1d_forward(const real[:, :, ::1] x, const real[:, :, ::1] w,
                   const real[::1] b, int stride):
    cdef Py_ssize_t batch = x.shape[0], t_in = x.shape[1], c_in = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[0], ksize = w.shape[2]
    cdef Py_ssize_t t_out = (t_in - ksize) // stride + 1
    cdef Py_ssize_t span = ksize * c_in
    if real is float:
        y_arr = np.empty((batch, t_out, c_out), dtype=np.float32)
    else:
        y_arr = np.empty((batch, t_out, c_out), dtype=np.float64)
    # (c_out, ksize*c_in), taps and channels interleaved to match the patch
    wt_arr = np.ascontiguousarray(
        np.asarray(w).transpose(0, 2, 1).reshape(c_out, span)
    )
    cdef real[:, :, ::1] y = y_arr
    cdef const real[:, ::1] wt = wt_arr
    cdef Py_ssize_t n, t, o, k, t0
    cdef const real* xrow
    with nogil:
        for n in range(batch):
            for t in range(t_out):
                t0 = t * stride
                xrow = &x[n, t0, 0]  # patch is contiguous: ksize*c_in floats
                for o in range(c_out):
                    y[n, t, o] = b[o] + _dot(xrow, &wt[o, 0], span)
    return y_arr


def conv1d_backward(const real[:, :, ::1] x, const real[:, :, ::1] w, int stride,
                    const real[:, :, ::1] gy):
    cdef Py_ssize_t batch = x.shape[0], t_in = x.shape[1], c_in = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[0], ksize = w.shape[2]
    cdef Py_ssize_t t_out = gy.shape[1]
    cdef Py_ssize_t span = ksize * c_in
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gx_arr = np.zeros((batch, t_in, c_in), dtype=dtype)
    gwt_arr = np.zeros((c_out, span), dtype=dtype)
    gb_arr = np.zeros(c_out, dtype=dtype)
    wt_arr = np.ascontiguousarray(
        np.asarray(w).transpose(0, 2, 1).reshape(c_out, span)
    )
    cdef real[:, :, ::1] gx = gx_arr
    cdef real[:, ::1] gwt = gwt_arr
    cdef real[::1] gb = gb_arr
    cdef const real[:, ::1] wt = wt_arr
    cdef Py_ssize_t n, t, o, t0
    cdef real g
    cdef const real* xrow
    cdef real* gxrow
    with nogil:
        for n in range(batch):
            for t in range(t_out):
                t0 = t * stride
                xrow = &x[n, t0, 0]
                gxrow = &gx[n, t0, 0]
                for o in range(c_out):
                    g = gy[n, t, o]
                    gb[o] = gb[o] + g
                    _axpy(g, xrow, &gwt[o, 0], span)
                    _axpy(g, &wt[o, 0], gxrow, span)
    gw_arr = np.ascontiguousarray(
        gwt_arr.reshape(c_out, ksize, c_in).transpose(0, 2, 1)
    )
    return gx_arr, gw_arr, gb_arr


def deconv1d_forward(const real[:, :, ::1] x, const real[:, :, ::1] w,
                     const real[::1] b, int stride):
    cdef Py_ssize_t batch = x.shape[0], t_in = x.shape[1], c_in = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[1], ksize = w.shape[2]
    cdef Py_ssize_t t_out = (t_in - 1) * stride + ksize
    cdef Py_ssize_t span = ksize * c_out
    if real is float:
        y_arr = np.zeros((batch, t_out, c_out), dtype=np.float32)
    else:
        y_arr = np.zeros((batch, t_out, c_out), dtype=np.float64)
    # (c_in, ksize*c_out): per input channel, the contiguous output patch
    wt_arr = np.ascontiguousarray(
        np.asarray(w).transpose(0, 2, 1).reshape(c_in, span)
    )
    cdef real[:, :, ::1] y = y_arr
    cdef const real[:, ::1] wt = wt_arr
    cdef Py_ssize_t n, t, c, o, t0
    cdef real v
    with nogil:
        for n in range(batch):
            for t in range(t_in):
                t0 = t * stride
                for c in range(c_in):
                    v = x[n, t, c]
                    _axpy(v, &wt[c, 0], &y[n, t0, 0], span)
            for t in range(t_out):
                for o in range(c_out):
                    y[n, t, o] = y[n, t, o] + b[o]
    return y_arr


def deconv1d_backward(const real[:, :, ::1] x, const real[:, :, ::1] w, int stride,
                      const real[:, :, ::1] gy):
    cdef Py_ssize_t batch = x.shape[0], t_in = x.shape[1], c_in = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[1], ksize = w.shape[2]
    cdef Py_ssize_t t_out = gy.shape[1]
    cdef Py_ssize_t span = ksize * c_out
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gx_arr = np.zeros((batch, t_in, c_in), dtype=dtype)
    gwt_arr = np.zeros((c_in, span), dtype=dtype)
    gb_arr = np.zeros(c_out, dtype=dtype)
    wt_arr = np.ascontiguousarray(
        np.asarray(w).transpose(0, 2, 1).reshape(c_in, span)
    )
    cdef real[:, :, ::1] gx = gx_arr
    cdef real[:, ::1] gwt = gwt_arr
    cdef real[::1] gb = gb_arr
    cdef const real[:, ::1] wt = wt_arr
    cdef Py_ssize_t n, t, c, o, t0
    cdef real v
    cdef const real* gyrow
    with nogil:
        for n in range(batch):
            for t in range(t_out):
                for o in range(c_out):
                    gb[o] = gb[o] + gy[n, t, o]
            for t in range(t_in):
                t0 = t * stride
                gyrow = &gy[n, t0, 0]  # contiguous ksize*c_out floats
                for c in range(c_in):
                    gx[n, t, c] = _dot(gyrow, &wt[c, 0], span)
                    _axpy(x[n, t, c], gyrow, &gwt[c, 0], span)
    gw_arr = np.ascontiguousarray(
        gwt_arr.reshape(c_in, ksize, c_out).transpose(0, 2, 1)
    )
    return gx_arr, gw_arr, gb_arr
