"""Pure-numpy convolution and pooling kernels (fallback backend).

Same signatures and semantics as the compiled extension: float64, valid
(no-padding) windows, pooling ties resolved to the first maximum in window
raster order.
"""

from __future__ import annotations

import numpy as np


def _windows(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Strided (N, H2, W2, k, k, C) view of all valid windows."""
    n, h, w, c = x.shape
    h2 = (h - k) // stride + 1
    w2 = (w - k) // stride + 1
    sn, sh, sw, sc = x.strides
    return np.lib.stride_tricks.as_strided(
        x, (n, h2, w2, k, k, c), (sn, sh * stride, sw * stride, sh, sw, sc)
    )


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    """Valid cross-correlation plus bias; x (N,H,W,C), w (k,k,C,F) -> (N,H2,W2,F)."""
    k = w.shape[0]
    win = _windows(x, k, stride)
    return np.einsum("nhwijc,ijcf->nhwf", win, w, optimize=True) + b


def conv2d_grad(
    x: np.ndarray, w: np.ndarray, stride: int, dout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. input, weights and bias for conv2d."""
    k = w.shape[0]
    _, h2, w2, _ = dout.shape
    win = _windows(x, k, stride)
    db = dout.sum(axis=(0, 1, 2))
    dw = np.einsum("nhwijc,nhwf->ijcf", win, dout, optimize=True)
    dx = np.zeros_like(x)
    for di in range(k):
        for dj in range(k):
            dx[
                :,
                di : di + (h2 - 1) * stride + 1 : stride,
                dj : dj + (w2 - 1) * stride + 1 : stride,
                :,
            ] += dout @ w[di, dj].T
    return dx, dw, db


def maxpool2d(x: np.ndarray, window: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-window channelwise max; also returns flat (row*W + col) argmax indices."""
    n, h, w, c = x.shape
    win = _windows(x, window, stride)
    h2, w2 = win.shape[1:3]
    flat = win.reshape(n, h2, w2, window * window, c)
    arg = flat.argmax(axis=3)  # first max in window raster order
    out = np.take_along_axis(flat, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    rows = (np.arange(h2) * stride)[None, :, None, None] + arg // window
    cols = (np.arange(w2) * stride)[None, None, :, None] + arg % window
    return out, rows * w + cols


def maxpool2d_grad(
    arg: np.ndarray, dout: np.ndarray, h: int, w: int
) -> np.ndarray:
    """Scatter pooled gradients back to the argmax input positions."""
    n, h2, w2, c = dout.shape
    dx = np.zeros((n, h * w, c), dtype=np.float64)
    ni = np.broadcast_to(np.arange(n)[:, None, None, None], arg.shape)
    ci = np.broadcast_to(np.arange(c)[None, None, None, :], arg.shape)
    np.add.at(dx, (ni, arg, ci), dout)
    return dx.reshape(n, h, w, c)
