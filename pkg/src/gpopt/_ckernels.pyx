# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double SQRT5 = sqrt(5.0)


cdef inline double _kval(double r2, double sf2, int family) noexcept nogil:
    cdef double r
    if family == 0:
        return sf2 * exp(-0.5 * r2)
    r = sqrt(r2)
    return sf2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * exp(-SQRT5 * r)


cdef inline double _radial(double r2, double sf2, int family) noexcept nogil:
    cdef double r
    if family == 0:
        return sf2 * exp(-0.5 * r2)
    r = sqrt(r2)
    return sf2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * exp(-SQRT5 * r)


def kernel_matrix(X1, X2, lengthscales, double signal_variance, int family):
    cdef const double[:, ::1] a = np.ascontiguousarray(X1, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(X2, dtype=np.float64)
    cdef const double[::1] ls = np.ascontiguousarray(lengthscales, dtype=np.float64)
    cdef Py_ssize_t n1 = a.shape[0], n2 = b.shape[0], d = a.shape[1]
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double r2, t
    with nogil:
        for i in range(n1):
            for j in range(n2):
                r2 = 0.0
                for k in range(d):
                    t = (a[i, k] - b[j, k]) / ls[k]
                    r2 = r2 + t * t
                out[i, j] = _kval(r2, signal_variance, family)
    return out_arr


def lengthscale_traces(X, W, lengthscales, double signal_variance, int family):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[::1] ls = np.ascontiguousarray(lengthscales, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] sq = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t i, j, k
    cdef double r2, t, g
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                r2 = 0.0
                for k in range(d):
                    t = (x[i, k] - x[j, k]) / ls[k]
                    sq[k] = t * t
                    r2 = r2 + sq[k]
                g = _radial(r2, signal_variance, family) * (w[i, j] + w[j, i])
                for k in range(d):
                    out[k] = out[k] + g * sq[k]
    return out_arr


def kernel_x_grad(x, X, lengthscales, double signal_variance, int family):
    cdef const double[::1] q = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] ls = np.ascontiguousarray(lengthscales, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], d = b.shape[1]
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, k
    cdef double r2, t, g
    with nogil:
        for j in range(n):
            r2 = 0.0
            for k in range(d):
                t = (q[k] - b[j, k]) / ls[k]
                r2 = r2 + t * t
            g = _radial(r2, signal_variance, family)
            for k in range(d):
                out[j, k] = -g * (q[k] - b[j, k]) / (ls[k] * ls[k])
    return out_arr


def min_pairwise_distance(A):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double best = 1.0 / 0.0
    cdef double s, t
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                s = 0.0
                for k in range(d):
                    t = a[i, k] - a[j, k]
                    s = s + t * t
                    if s >= best:
                        break
                if s < best:
                    best = s
    return sqrt(best)


def nondominated_mask(Y):
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    mask_arr = np.ones(n, dtype=bool)
    cdef cnp.npy_bool[::1] mask = mask_arr
    cdef Py_ssize_t p, q, k
    cdef bint weak, strict
    with nogil:
        for p in range(n):
            for q in range(n):
                if q == p:
                    continue
                weak = True
                strict = False
                for k in range(m):
                    if y[q, k] > y[p, k]:
                        weak = False
                        break
                    if y[q, k] < y[p, k]:
                        strict = True
                if weak and strict:
                    mask[p] = False
                    break
    return mask_arr
