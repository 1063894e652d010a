# Compiled convolution and pooling kernels. Semantics match
# kernels_numpy.py: float64, valid windows, pooling ties -> first maximum
# in window raster order.

import numpy as np


def conv2d(x, w, b, int stride):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] wv = w
    cdef double[::1] bv = b
    cdef Py_ssize_t N = xv.shape[0], H = xv.shape[1], W = xv.shape[2], C = xv.shape[3]
    cdef Py_ssize_t k = wv.shape[0], F = wv.shape[3]
    cdef Py_ssize_t H2 = (H - k) // stride + 1
    cdef Py_ssize_t W2 = (W - k) // stride + 1
    out_arr = np.empty((N, H2, W2, F), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, i, j, f, di, dj, c
    cdef double xval
    with nogil:
        for n in range(N):
            for i in range(H2):
                for j in range(W2):
                    for f in range(F):
                        out[n, i, j, f] = bv[f]
                    for di in range(k):
                        for dj in range(k):
                            for c in range(C):
                                xval = xv[n, i * stride + di, j * stride + dj, c]
                                for f in range(F):
                                    out[n, i, j, f] += xval * wv[di, dj, c, f]
    return out_arr


def conv2d_grad(x, w, int stride, dout):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    dout = np.ascontiguousarray(dout, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] wv = w
    cdef double[:, :, :, ::1] dov = dout
    cdef Py_ssize_t N = xv.shape[0], H = xv.shape[1], W = xv.shape[2], C = xv.shape[3]
    cdef Py_ssize_t k = wv.shape[0], F = wv.shape[3]
    cdef Py_ssize_t H2 = dov.shape[1], W2 = dov.shape[2]
    dx_arr = np.zeros((N, H, W, C), dtype=np.float64)
    dw_arr = np.zeros((k, k, C, F), dtype=np.float64)
    db_arr = np.zeros(F, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t n, i, j, f, di, dj, c, ri, rj
    cdef double xval, g, acc
    with nogil:
        for n in range(N):
            for i in range(H2):
                for j in range(W2):
                    for f in range(F):
                        db[f] += dov[n, i, j, f]
                    for di in range(k):
                        ri = i * stride + di
                        for dj in range(k):
                            rj = j * stride + dj
                            for c in range(C):
                                xval = xv[n, ri, rj, c]
                                acc = 0.0
                                for f in range(F):
                                    g = dov[n, i, j, f]
                                    dw[di, dj, c, f] += xval * g
                                    acc += g * wv[di, dj, c, f]
                                dx[n, ri, rj, c] += acc
    return dx_arr, dw_arr, db_arr


def maxpool2d(x, int window, int stride):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = x
    cdef Py_ssize_t N = xv.shape[0], H = xv.shape[1], W = xv.shape[2], C = xv.shape[3]
    cdef Py_ssize_t H2 = (H - window) // stride + 1
    cdef Py_ssize_t W2 = (W - window) // stride + 1
    out_arr = np.empty((N, H2, W2, C), dtype=np.float64)
    arg_arr = np.empty((N, H2, W2, C), dtype=np.int64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef long long[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t n, i, j, c, di, dj, bi, bj
    cdef double best, v
    with nogil:
        for n in range(N):
            for i in range(H2):
                for j in range(W2):
                    for c in range(C):
                        best = xv[n, i * stride, j * stride, c]
                        bi = i * stride
                        bj = j * stride
                        for di in range(window):
                            for dj in range(window):
                                v = xv[n, i * stride + di, j * stride + dj, c]
                                if v > best:
                                    best = v
                                    bi = i * stride + di
                                    bj = j * stride + dj
                        out[n, i, j, c] = best
                        arg[n, i, j, c] = bi * W + bj
    return out_arr, arg_arr


def maxpool2d_grad(arg, dout, int h, int w):
    arg = np.ascontiguousarray(arg, dtype=np.int64)
    dout = np.ascontiguousarray(dout, dtype=np.float64)
    cdef long long[:, :, :, ::1] argv = arg
    cdef double[:, :, :, ::1] dov = dout
    cdef Py_ssize_t N = dov.shape[0], H2 = dov.shape[1], W2 = dov.shape[2], C = dov.shape[3]
    dx_arr = np.zeros((N, h, w, C), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef Py_ssize_t n, i, j, c
    cdef long long pos
    with nogil:
        for n in range(N):
            for i in range(H2):
                for j in range(W2):
                    for c in range(C):
                        pos = argv[n, i, j, c]
                        dx[n, pos // w, pos % w, c] += dov[n, i, j, c]
    return dx_arr
