"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x, kh, kw):
    n, c, h, w = x.shape
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # n, c, ho, wo, kh, kw
    cols = win.transpose(1, 4, 5, 0, 2, 3)
    return np.ascontiguousarray(cols).reshape(c * kh * kw, n, h - kh + 1, w - kw + 1)


def col2im(cols, shape, kh, kw):
    n, c, h, w = shape
    ho, wo = cols.shape[2], cols.shape[3]
    dx = np.zeros(shape, dtype=cols.dtype)
    blocks = cols.reshape(c, kh, kw, n, ho, wo)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i:i + ho, j:j + wo] += blocks[:, i, j].transpose(1, 0, 2, 3)
    return dx


def two_path(xr, xi, delay, cr, ci, out_len):
    yr = np.array(xr[:, :out_len], dtype=np.float64)
    yi = np.array(xi[:, :out_len], dtype=np.float64)
    if delay >= out_len:
        return yr, yi
    ar = xr[:, :out_len - delay]
    ai = xi[:, :out_len - delay]
    yr[:, delay:] += cr * ar - ci * ai
    yi[:, delay:] += cr * ai + ci * ar
    return yr, yi
