# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loops for the convolution lowering and the two-path channel.

Accumulation order matches ``_kernels_py`` exactly, so both backends give
bit-identical results.
"""
import numpy as np
cimport numpy as cnp

ctypedef fused real:
    float
    double

cnp.import_array()


def _im2col(real[:, :, :, ::1] x, real[:, :, :, ::1] cols, int kh, int kw):
    cdef Py_ssize_t n_batch = x.shape[0], n_chan = x.shape[1]
    cdef Py_ssize_t ho = cols.shape[2], wo = cols.shape[3]
    cdef Py_ssize_t n, c, i, j, r, h, w
    for c in range(n_chan):
        for i in range(kh):
            for j in range(kw):
                r = (c * kh + i) * kw + j
                for n in range(n_batch):
                    for h in range(ho):
                        for w in range(wo):
                            cols[r, n, h, w] = x[n, c, h + i, w + j]


def _col2im(real[:, :, :, ::1] cols, real[:, :, :, ::1] dx, int kh, int kw):
    cdef Py_ssize_t n_batch = dx.shape[0], n_chan = dx.shape[1]
    cdef Py_ssize_t ho = cols.shape[2], wo = cols.shape[3]
    cdef Py_ssize_t n, c, i, j, r, h, w
    for i in range(kh):
        for j in range(kw):
            for c in range(n_chan):
                r = (c * kh + i) * kw + j
                for n in range(n_batch):
                    for h in range(ho):
                        for w in range(wo):
                            dx[n, c, h + i, w + j] += cols[r, n, h, w]


def im2col(x, int kh, int kw):
    n, c, h, w = x.shape
    cols = np.empty((c * kh * kw, n, h - kh + 1, w - kw + 1), dtype=x.dtype)
    _im2col(np.ascontiguousarray(x), cols, kh, kw)
    return cols


def col2im(cols, shape, int kh, int kw):
    dx = np.zeros(shape, dtype=cols.dtype)
    _col2im(np.ascontiguousarray(cols), dx, kh, kw)
    return dx


def two_path(double[:, ::1] xr, double[:, ::1] xi, int delay,
             double cr, double ci, int out_len):
    """Direct path plus one delayed complex-scaled echo, as real arithmetic."""
    cdef Py_ssize_t n_frames = xr.shape[0]
    cdef Py_ssize_t f, k
    yr_arr = np.empty((n_frames, out_len), dtype=np.float64)
    yi_arr = np.empty((n_frames, out_len), dtype=np.float64)
    cdef double[:, ::1] yr = yr_arr
    cdef double[:, ::1] yi = yi_arr
    cdef double ar, ai
    for f in range(n_frames):
        for k in range(out_len):
            if k >= delay:
                ar = xr[f, k - delay]
                ai = xi[f, k - delay]
                yr[f, k] = xr[f, k] + (cr * ar - ci * ai)
                yi[f, k] = xi[f, k] + (cr * ai + ci * ar)
            else:
                yr[f, k] = xr[f, k]
                yi[f, k] = xi[f, k]
    return yr_arr, yi_arr
