# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled im2col/col2im and max-pool kernels (5-D layout N, D, H, W, C)."""

import numpy as np
cimport numpy as cnp
from cython cimport floating

cnp.import_array()


def im2col(floating[:, :, :, :, ::1] xp, int kd, int kh, int kw, int sd, int sh, int sw):
    cdef Py_ssize_t n = xp.shape[0], d = xp.shape[1], h = xp.shape[2], w = xp.shape[3], c = xp.shape[4]
    cdef Py_ssize_t do = (d - kd) // sd + 1, ho = (h - kh) // sh + 1, wo = (w - kw) // sw + 1
    dtype = np.float32 if floating is float else np.float64
    out = np.empty((n * do * ho * wo, kd * kh * kw * c), dtype=dtype)
    cdef floating[:, ::1] cols = out
    cdef Py_ssize_t i, z, y, x, a, b, e, ch, r = 0, p
    with nogil:
        for i in range(n):
            for z in range(do):
                for y in range(ho):
                    for x in range(wo):
                        p = 0
                        for a in range(kd):
                            for b in range(kh):
                                for e in range(kw):
                                    for ch in range(c):
                                        cols[r, p] = xp[i, z * sd + a, y * sh + b, x * sw + e, ch]
                                        p += 1
                        r += 1
    return out


def col2im(floating[:, ::1] cols, tuple xshape, int kd, int kh, int kw, int sd, int sh, int sw):
    cdef Py_ssize_t n = xshape[0], d = xshape[1], h = xshape[2], w = xshape[3], c = xshape[4]
    cdef Py_ssize_t do = (d - kd) // sd + 1, ho = (h - kh) // sh + 1, wo = (w - kw) // sw + 1
    dtype = np.float32 if floating is float else np.float64
    out = np.zeros(xshape, dtype=dtype)
    cdef floating[:, :, :, :, ::1] dx = out
    cdef Py_ssize_t i, z, y, x, a, b, e, ch, r, p
    # kernel offsets outermost so every element accumulates in the same
    # order as the numpy fallback (bit-identical sums)
    with nogil:
        for a in range(kd):
            for b in range(kh):
                for e in range(kw):
                    p = ((a * kh + b) * kw + e) * c
                    for i in range(n):
                        for z in range(do):
                            for y in range(ho):
                                for x in range(wo):
                                    r = ((i * do + z) * ho + y) * wo + x
                                    for ch in range(c):
                                        dx[i, z * sd + a, y * sh + b, x * sw + e, ch] += cols[r, p + ch]
    return out


def maxpool_forward(floating[:, :, :, :, :] x, int pd, int ph, int pw):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[4]
    cdef Py_ssize_t do = x.shape[1] // pd, ho = x.shape[2] // ph, wo = x.shape[3] // pw
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((n, do, ho, wo, c), dtype=dtype)
    idx_arr = np.empty((n, do, ho, wo, c), dtype=np.int64)
    cdef floating[:, :, :, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, :, :, ::1] idx = idx_arr
    cdef Py_ssize_t i, z, y, xx, ch, a, b, e, k, best_k
    cdef floating v, best
    with nogil:
        for i in range(n):
            for z in range(do):
                for y in range(ho):
                    for xx in range(wo):
                        for ch in range(c):
                            best = x[i, z * pd, y * ph, xx * pw, ch]
                            best_k = 0
                            k = 0
                            for a in range(pd):
                                for b in range(ph):
                                    for e in range(pw):
                                        v = x[i, z * pd + a, y * ph + b, xx * pw + e, ch]
                                        # NaN propagates like numpy argmax
                                        if v > best or (v != v and best == best):
                                            best = v
                                            best_k = k
                                        k += 1
                            out[i, z, y, xx, ch] = best
                            idx[i, z, y, xx, ch] = best_k
    return out_arr, idx_arr


def maxpool_backward(floating[:, :, :, :, :] dy, cnp.int64_t[:, :, :, :, :] idx, tuple xshape,
                     int pd, int ph, int pw):
    cdef Py_ssize_t n = dy.shape[0], do = dy.shape[1], ho = dy.shape[2], wo = dy.shape[3], c = dy.shape[4]
    dtype = np.float32 if floating is float else np.float64
    out = np.zeros(xshape, dtype=dtype)
    cdef floating[:, :, :, :, ::1] dx = out
    cdef Py_ssize_t i, z, y, xx, ch, k, a, b, e
    with nogil:
        for i in range(n):
            for z in range(do):
                for y in range(ho):
                    for xx in range(wo):
                        for ch in range(c):
                            k = idx[i, z, y, xx, ch]
                            a = k // (ph * pw)
                            b = (k // pw) % ph
                            e = k % pw
                            dx[i, z * pd + a, y * ph + b, xx * pw + e, ch] += dy[i, z, y, xx, ch]
    return out
