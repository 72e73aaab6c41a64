"""Compiled hot loops: pairwise distances and half-integer Matérn blocks.

Both functions mirror ``mixkern._kernels_py`` exactly in signature and
return values. Symmetric inputs are evaluated on the upper triangle and
mirrored so the output is bitwise symmetric.
"""
import numpy as np

from libc.math cimport exp, sqrt


def distances(const double[:, ::1] X1, const double[:, ::1] X2):
    cdef Py_ssize_t n1 = X1.shape[0], n2 = X2.shape[0], p = X1.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    if X2.shape[1] != p:
        raise ValueError("input dimensions differ")
    out = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] D = out
    for i in range(n1):
        for j in range(n2):
            acc = 0.0
            for k in range(p):
                diff = X1[i, k] - X2[j, k]
                acc += diff * diff
            D[i, j] = sqrt(acc)
    return out


def sym_distances(const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] D = out
    for i in range(n):
        D[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(p):
                diff = X[i, k] - X[j, k]
                acc += diff * diff
            D[i, j] = sqrt(acc)
            D[j, i] = D[i, j]
    return out


cdef inline double _horner(const double[::1] c, double r) noexcept nogil:
    cdef Py_ssize_t j = c.shape[0] - 1
    cdef double acc = c[j]
    while j > 0:
        j -= 1
        acc = acc * r + c[j]
    return acc


def matern_unit(const double[:, ::1] D, double alpha,
                const double[::1] pcoef, const double[::1] qcoef,
                bint symmetric):
    """Unit-variance Matérn block and its alpha-derivative.

    K = P(r) exp(-r), dK/dalpha = d Q(r) exp(-r), r = alpha * d.
    """
    cdef Py_ssize_t n1 = D.shape[0], n2 = D.shape[1]
    cdef Py_ssize_t i, j, jstart
    cdef double d, r, e
    kout = np.empty((n1, n2), dtype=np.float64)
    gout = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] K = kout
    cdef double[:, ::1] G = gout
    with nogil:
        for i in range(n1):
            jstart = i if symmetric else 0
            for j in range(jstart, n2):
                d = D[i, j]
                r = alpha * d
                e = exp(-r)
                K[i, j] = _horner(pcoef, r) * e
                G[i, j] = d * _horner(qcoef, r) * e
                if symmetric and j != i:
                    K[j, i] = K[i, j]
                    G[j, i] = G[i, j]
    return kout, gout


def matern_accumulate_lower(const double[:, ::1] D, double alpha, double scale,
                            const double[::1] pcoef, double[:, ::1] K):
    """K[i, j] += scale * P(r) exp(-r) on the lower triangle (j <= i) only."""
    cdef Py_ssize_t n = D.shape[0], i, j
    cdef double r
    with nogil:
        for i in range(n):
            for j in range(i + 1):
                r = alpha * D[i, j]
                K[i, j] += scale * _horner(pcoef, r) * exp(-r)


def matern_wdots(const double[:, ::1] D, const double[:, ::1] W, double alpha,
                 const double[::1] pcoef, const double[::1] qcoef, bint upper=False):
    """(sum W * Ku, sum W * dKu/dalpha) for symmetric W stored in one triangle.

    Reads the strict lower triangle of W, or the strict upper one when
    ``upper`` is set, plus the diagonal.
    """
    cdef Py_ssize_t n = D.shape[0], i, j, jlo, jhi
    cdef double d, r, e, sk = 0.0, sg = 0.0, dk = 0.0
    with nogil:
        for i in range(n):
            jlo = i + 1 if upper else 0
            jhi = n if upper else i
            for j in range(jlo, jhi):
                d = D[i, j]
                r = alpha * d
                e = exp(-r) * W[i, j]
                sk += _horner(pcoef, r) * e
                sg += d * _horner(qcoef, r) * e
            # diagonal: d = 0, so Ku = P(0) and the derivative vanishes
            dk += W[i, i] * pcoef[0]
    return 2.0 * sk + dk, 2.0 * sg
