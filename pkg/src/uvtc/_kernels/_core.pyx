# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``_numpy``: same kernels, same operation order.

Both backends must stay bit-exact matches; keep the corner weighting and
the per-corner / per-channel accumulation passes in sync with _numpy.py.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def warp_bilinear(double[:, :, ::1] img, double[:, :, ::1] flow):
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t c = img.shape[2]
    out_arr = np.zeros((h, w, c))
    valid_arr = np.zeros((h, w), dtype=np.bool_)
    cdef double[:, :, ::1] out = out_arr
    cdef cnp.uint8_t[:, ::1] valid = valid_arr.view(np.uint8)
    cdef Py_ssize_t y, x, ch, x0, y0
    cdef double sx, sy, bx, by, fx, fy, w00, w01, w10, w11

    for y in range(h):
        for x in range(w):
            sx = x + flow[y, x, 0]
            sy = y + flow[y, x, 1]
            if sx >= 0.0 and sx <= w - 1.0 and sy >= 0.0 and sy <= h - 1.0:
                valid[y, x] = 1
            bx = sx // 1.0
            if bx < 0.0:
                bx = 0.0
            elif bx > w - 2.0:
                bx = w - 2.0
            by = sy // 1.0
            if by < 0.0:
                by = 0.0
            elif by > h - 2.0:
                by = h - 2.0
            fx = sx - bx
            fy = sy - by
            x0 = <Py_ssize_t>bx
            y0 = <Py_ssize_t>by
            if not valid[y, x]:
                continue
            w00 = (1.0 - fy) * (1.0 - fx)
            w01 = (1.0 - fy) * fx
            w10 = fy * (1.0 - fx)
            w11 = fy * fx
            for ch in range(c):
                out[y, x, ch] = ((w00 * img[y0, x0, ch] + w01 * img[y0, x0 + 1, ch])
                                 + w10 * img[y0 + 1, x0, ch]) + w11 * img[y0 + 1, x0 + 1, ch]
    return out_arr, valid_arr


def warp_bilinear_grad(double[:, :, ::1] grad_out, double[:, :, ::1] flow,
                       valid, Py_ssize_t h_src, Py_ssize_t w_src):
    cdef Py_ssize_t h = grad_out.shape[0]
    cdef Py_ssize_t w = grad_out.shape[1]
    cdef Py_ssize_t c = grad_out.shape[2]
    grad_arr = np.zeros((h_src, w_src, c))
    tmp_arr = np.empty((h_src, w_src))
    cdef double[:, :, ::1] grad = grad_arr
    cdef double[:, ::1] tmp = tmp_arr
    cdef cnp.uint8_t[:, ::1] vmask = np.ascontiguousarray(valid, dtype=np.uint8)
    cdef Py_ssize_t y, x, ch, x0, y0, corner
    cdef double sx, sy, bx, by, fx, fy, wt, g

    # one pass per corner into a fresh subtotal buffer, then one add onto
    # the accumulator: mirrors the fallback's bincount-then-add rounding
    for corner in range(4):
        for ch in range(c):
            tmp_arr.fill(0.0)
            for y in range(h):
                for x in range(w):
                    sx = x + flow[y, x, 0]
                    sy = y + flow[y, x, 1]
                    bx = sx // 1.0
                    if bx < 0.0:
                        bx = 0.0
                    elif bx > w_src - 2.0:
                        bx = w_src - 2.0
                    by = sy // 1.0
                    if by < 0.0:
                        by = 0.0
                    elif by > h_src - 2.0:
                        by = h_src - 2.0
                    fx = sx - bx
                    fy = sy - by
                    x0 = <Py_ssize_t>bx
                    y0 = <Py_ssize_t>by
                    if corner == 0:
                        wt = (1.0 - fy) * (1.0 - fx)
                    elif corner == 1:
                        wt = (1.0 - fy) * fx
                        x0 += 1
                    elif corner == 2:
                        wt = fy * (1.0 - fx)
                        y0 += 1
                    else:
                        wt = fy * fx
                        x0 += 1
                        y0 += 1
                    g = grad_out[y, x, ch] * vmask[y, x]
                    tmp[y0, x0] += g * wt
            for y in range(h_src):
                for x in range(w_src):
                    grad[y, x, ch] += tmp[y, x]
    return grad_arr


def segment_sum(double[:, ::1] values, cnp.int64_t[::1] index, Py_ssize_t n_segments):
    cdef Py_ssize_t p = values.shape[0]
    cdef Py_ssize_t c = values.shape[1]
    out_arr = np.zeros((n_segments, c))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, ch
    for ch in range(c):
        for i in range(p):
            out[index[i], ch] += values[i, ch]
    return out_arr
