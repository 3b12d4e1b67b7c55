# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Convolutions are lowered to im2col + BLAS dgemm (one GEMM per batch item,
scratch buffer reused); max pooling uses direct loops, which beat the
vectorized-numpy route on the small windows this package uses. Contracts
match subsevo._kernels._fallback.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline void rm_dgemm(bint trans_a, bint trans_b, int m, int n, int k,
                          double alpha, double* a, int lda, double* b,
                          int ldb, double beta, double* c, int ldc) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)op(B) + beta*C via Fortran dgemm
    (compute the column-major transpose with swapped operands)."""
    cdef char ca = b'T' if trans_a else b'N'
    cdef char cb = b'T' if trans_b else b'N'
    dgemm(&cb, &ca, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef inline void im2col(const double* x, double* cols, Py_ssize_t c_in,
                        Py_ssize_t h, Py_ssize_t w, Py_ssize_t kh,
                        Py_ssize_t kw, Py_ssize_t oh, Py_ssize_t ow,
                        Py_ssize_t sh, Py_ssize_t sw) noexcept nogil:
    # cols layout: (c_in*kh*kw, oh*ow) row-major
    cdef Py_ssize_t ci, i, j, r, c, row
    cdef const double* src
    cdef double* dst
    row = 0
    for ci in range(c_in):
        for i in range(kh):
            for j in range(kw):
                dst = cols + row * (oh * ow)
                for r in range(oh):
                    src = x + ci * h * w + (r * sh + i) * w + j
                    for c in range(ow):
                        dst[r * ow + c] = src[c * sw]
                row += 1


cdef inline void col2im_add(const double* cols, double* x, Py_ssize_t c_in,
                            Py_ssize_t h, Py_ssize_t w, Py_ssize_t kh,
                            Py_ssize_t kw, Py_ssize_t oh, Py_ssize_t ow,
                            Py_ssize_t sh, Py_ssize_t sw) noexcept nogil:
    cdef Py_ssize_t ci, i, j, r, c, row
    cdef const double* src
    cdef double* dst
    row = 0
    for ci in range(c_in):
        for i in range(kh):
            for j in range(kw):
                src = cols + row * (oh * ow)
                for r in range(oh):
                    dst = x + ci * h * w + (r * sh + i) * w + j
                    for c in range(ow):
                        dst[c * sw] += src[r * ow + c]
                row += 1


def conv2d_forward(const double[:, :, :, ::1] x,
                   const double[:, :, :, ::1] kernels,
                   const double[::1] bias, Py_ssize_t stride_h,
                   Py_ssize_t stride_w):
    cdef Py_ssize_t n = x.shape[0], c_in = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t c_out = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3]
    cdef Py_ssize_t oh = (h - kh) // stride_h + 1
    cdef Py_ssize_t ow = (w - kw) // stride_w + 1
    cdef Py_ssize_t patch = c_in * kh * kw, plane = oh * ow

    out_arr = np.empty((n, c_out, oh, ow))
    cols_arr = np.empty((patch, plane))
    cdef double[:, :, :, ::1] out = out_arr
    cdef double[:, ::1] cols = cols_arr
    cdef Py_ssize_t b, co, p
    cdef double bv

    for b in range(n):
        im2col(&x[b, 0, 0, 0], &cols[0, 0], c_in, h, w, kh, kw, oh, ow,
               stride_h, stride_w)
        rm_dgemm(False, False, <int>c_out, <int>plane, <int>patch, 1.0,
                 <double*>&kernels[0, 0, 0, 0], <int>patch, &cols[0, 0],
                 <int>plane, 0.0, &out[b, 0, 0, 0], <int>plane)
        for co in range(c_out):
            bv = bias[co]
            for p in range(plane):
                out[b, co, p // ow, p % ow] += bv
    return out_arr


def conv2d_backward(const double[:, :, :, ::1] x,
                    const double[:, :, :, ::1] kernels,
                    Py_ssize_t stride_h, Py_ssize_t stride_w,
                    const double[:, :, :, ::1] grad_out):
    cdef Py_ssize_t n = x.shape[0], c_in = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t c_out = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3]
    cdef Py_ssize_t oh = grad_out.shape[2], ow = grad_out.shape[3]
    cdef Py_ssize_t patch = c_in * kh * kw, plane = oh * ow

    grad_x_arr = np.zeros((n, c_in, h, w))
    grad_k_arr = np.zeros((c_out, c_in, kh, kw))
    grad_b_arr = np.zeros(c_out)
    cols_arr = np.empty((patch, plane))
    gcols_arr = np.empty((patch, plane))
    cdef double[:, :, :, ::1] grad_x = grad_x_arr
    cdef double[:, :, :, ::1] grad_k = grad_k_arr
    cdef double[::1] grad_b = grad_b_arr
    cdef double[:, ::1] cols = cols_arr
    cdef double[:, ::1] gcols = gcols_arr
    cdef Py_ssize_t b, co, p
    cdef double acc

    for b in range(n):
        for co in range(c_out):
            acc = 0.0
            for p in range(plane):
                acc += grad_out[b, co, p // ow, p % ow]
            grad_b[co] += acc
        im2col(&x[b, 0, 0, 0], &cols[0, 0], c_in, h, w, kh, kw, oh, ow,
               stride_h, stride_w)
        # dK(c_out, patch) += dY_b(c_out, plane) @ cols(patch, plane)^T
        rm_dgemm(False, True, <int>c_out, <int>patch, <int>plane, 1.0,
                 <double*>&grad_out[b, 0, 0, 0], <int>plane, &cols[0, 0],
                 <int>plane, 1.0, &grad_k[0, 0, 0, 0], <int>patch)
        # dcols(patch, plane) = K(c_out, patch)^T @ dY_b(c_out, plane)
        rm_dgemm(True, False, <int>patch, <int>plane, <int>c_out, 1.0,
                 <double*>&kernels[0, 0, 0, 0], <int>patch,
                 <double*>&grad_out[b, 0, 0, 0], <int>plane, 0.0,
                 &gcols[0, 0], <int>plane)
        col2im_add(&gcols[0, 0], &grad_x[b, 0, 0, 0], c_in, h, w, kh, kw,
                   oh, ow, stride_h, stride_w)
    return grad_x_arr, grad_k_arr, grad_b_arr


def maxpool_forward(const double[:, :, :, ::1] x, Py_ssize_t win_h,
                    Py_ssize_t win_w, Py_ssize_t stride_h,
                    Py_ssize_t stride_w):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h - win_h) // stride_h + 1
    cdef Py_ssize_t ow = (w - win_w) // stride_w + 1
    out_arr = np.empty((n, c, oh, ow))
    arg_arr = np.empty((n, c, oh, ow), dtype=np.int64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t b, ch, r, co, i, j, r0, c0, best_r, best_c
    cdef double best, v

    for b in range(n):
        for ch in range(c):
            for r in range(oh):
                for co in range(ow):
                    r0 = r * stride_h
                    c0 = co * stride_w
                    best = x[b, ch, r0, c0]
                    best_r = r0
                    best_c = c0
                    for i in range(win_h):
                        for j in range(win_w):
                            v = x[b, ch, r0 + i, c0 + j]
                            if v > best:
                                best = v
                                best_r = r0 + i
                                best_c = c0 + j
                    out[b, ch, r, co] = best
                    arg[b, ch, r, co] = best_r * w + best_c
    return out_arr, arg_arr


def maxpool_backward(const double[:, :, :, ::1] grad_out,
                     const cnp.int64_t[:, :, :, ::1] argmax,
                     Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n = grad_out.shape[0], c = grad_out.shape[1]
    cdef Py_ssize_t oh = grad_out.shape[2], ow = grad_out.shape[3]
    grad_x_arr = np.zeros((n, c, h, w))
    cdef double[:, :, :, ::1] grad_x = grad_x_arr
    cdef Py_ssize_t b, ch, r, co, flat

    for b in range(n):
        for ch in range(c):
            for r in range(oh):
                for co in range(ow):
                    flat = argmax[b, ch, r, co]
                    grad_x[b, ch, flat // w, flat % w] += grad_out[b, ch, r, co]
    return grad_x_arr
