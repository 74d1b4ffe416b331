# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled MLP kernels.

Same flat layout and calling convention as ``_kernels_python``. Matrix
products go straight to BLAS through ``scipy.linalg.cython_blas``; bias,
ReLU and reductions are plain C loops, so a call costs one Python dispatch
instead of a dozen numpy ones.
"""

from scipy.linalg.cython_blas cimport dgemm

BACKEND = "cython"


cdef inline void _gemm_rm(char *ta, char *tb, int m, int n, int k,
                          double *a, int lda, double *b, int ldb,
                          double beta, double *c, int ldc) noexcept nogil:
    # row-major C (m, n) = op(A) @ op(B), expressed as column-major C^T
    cdef double one = 1.0
    dgemm(tb, ta, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)


def mlp_forward(const double[::1] theta, sizes, const double[:, ::1] x,
                double[:, ::1] h1, double[:, ::1] h2, double[::1] out):
    cdef int d_in = sizes[0]
    cdef int n1 = sizes[1]
    cdef int n2 = sizes[2]
    cdef int B = x.shape[0]
    cdef int i, j
    cdef double *p = <double *> &theta[0]
    cdef double *W1 = p
    cdef double *b1 = W1 + d_in * n1
    cdef double *W2 = b1 + n1
    cdef double *b2 = W2 + n1 * n2
    cdef double *W3 = b2 + n2
    cdef double *b3 = W3 + n2
    cdef double acc, v
    cdef char *tn = b"N"
    if B == 0:
        return
    with nogil:
        _gemm_rm(tn, tn, B, n1, d_in, <double *> &x[0, 0], d_in, W1, n1, 0.0, &h1[0, 0], n1)
        for i in range(B):
            for j in range(n1):
                v = h1[i, j] + b1[j]
                h1[i, j] = v if v > 0.0 else 0.0
        _gemm_rm(tn, tn, B, n2, n1, &h1[0, 0], n1, W2, n2, 0.0, &h2[0, 0], n2)
        for i in range(B):
            acc = b3[0]
            for j in range(n2):
                v = h2[i, j] + b2[j]
                if v > 0.0:
                    h2[i, j] = v
                    acc = acc + v * W3[j]
                else:
                    h2[i, j] = 0.0
            out[i] = acc


def mlp_backward(const double[::1] theta, sizes, const double[:, ::1] x,
                 const double[:, ::1] h1, const double[:, ::1] h2, const double[::1] dout,
                 double[::1] grad, double[:, ::1] dx=None):
    cdef int d_in = sizes[0]
    cdef int n1 = sizes[1]
    cdef int n2 = sizes[2]
    cdef int B = x.shape[0]
    cdef int i, j
    cdef double *W1 = <double *> &theta[0]
    cdef double *W2 = W1 + d_in * n1 + n1
    cdef double *W3 = W2 + n1 * n2 + n2
    cdef double *gW1 = &grad[0]
    cdef double *gb1 = gW1 + d_in * n1
    cdef double *gW2 = gb1 + n1
    cdef double *gb2 = gW2 + n1 * n2
    cdef double *gW3 = gb2 + n2
    cdef double *gb3 = gW3 + n2
    cdef double g
    cdef char *tn = b"N"
    cdef char *tt = b"T"
    cdef double[:, ::1] delta2
    cdef double[:, ::1] delta1
    cdef bint has_dx = dx is not None
    import numpy as np
    delta2 = np.empty((B, n2))
    delta1 = np.empty((B, n1))
    if B == 0:
        grad[:] = 0.0
        if dx is not None:
            dx[:, :] = 0.0
        return
    with nogil:
        for j in range(n2):
            gW3[j] = 0.0
            gb2[j] = 0.0
        g = 0.0
        for i in range(B):
            g = g + dout[i]
            for j in range(n2):
                gW3[j] = gW3[j] + h2[i, j] * dout[i]
                if h2[i, j] > 0.0:
                    delta2[i, j] = dout[i] * W3[j]
                else:
                    delta2[i, j] = 0.0
                gb2[j] = gb2[j] + delta2[i, j]
        gb3[0] = g
        # gW2 = h1^T @ delta2
        _gemm_rm(tt, tn, n1, n2, B, <double *> &h1[0, 0], n1, &delta2[0, 0], n2, 0.0, gW2, n2)
        # delta1 = delta2 @ W2^T, masked
        _gemm_rm(tn, tt, B, n1, n2, &delta2[0, 0], n2, W2, n2, 0.0, &delta1[0, 0], n1)
        for j in range(n1):
            gb1[j] = 0.0
        for i in range(B):
            for j in range(n1):
                if h1[i, j] <= 0.0:
                    delta1[i, j] = 0.0
                gb1[j] = gb1[j] + delta1[i, j]
        _gemm_rm(tt, tn, d_in, n1, B, <double *> &x[0, 0], d_in, &delta1[0, 0], n1, 0.0, gW1, n1)
        if has_dx:
            _gemm_rm(tn, tt, B, d_in, n1, &delta1[0, 0], n1, W1, n1, 0.0, &dx[0, 0], d_in)
