# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: symmetric eigensolver and pairwise distances.

The eigensolver is Householder tridiagonalization followed by the implicit
QL algorithm with Wilkinson-style shifts (EISPACK tred2/tql2 lineage).
Signatures mirror ``meib._pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot

cnp.import_array()

cdef enum:
    MAX_QL_ITER = 60


cdef void _tred2(double[:, ::1] V, double[::1] d, double[::1] e, bint vectors) noexcept nogil:
    cdef Py_ssize_t n = V.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double scale, h, f, g, hh

    for j in range(n):
        d[j] = V[n - 1, j]

    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += fabs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= f * e[k] + g * d[k]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h

    if not vectors:
        for i in range(n):
            d[i] = V[i, i]
        e[0] = 0.0
        return

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


cdef int _tql2(double[:, ::1] W, double[::1] d, double[::1] e, bint vectors) noexcept nogil:
    # W holds eigenvectors as rows so each Givens rotation touches contiguous memory.
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, j, k, l, m
    cdef int it
    cdef double f = 0.0, tst1 = 0.0, eps = 2.220446049250313e-16
    cdef double g, p, r, dl1, h, c, c2, c3, el1, s, s2, wi, wi1

    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0

    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > MAX_QL_ITER:
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f = f + h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    if vectors:
                        for k in range(n):
                            wi = W[i, k]
                            wi1 = W[i + 1, k]
                            W[i + 1, k] = s * wi + c * wi1
                            W[i, k] = c * wi - s * wi1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if fabs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0

    for i in range(n - 1):
        k = i
        p = d[i]
        for j in range(i + 1, n):
            if d[j] < p:
                k = j
                p = d[j]
        if k != i:
            d[k] = d[i]
            d[i] = p
            if vectors:
                for j in range(n):
                    p = W[i, j]
                    W[i, j] = W[k, j]
                    W[k, j] = p
    return 0


def eigh_tridiag_ql(a, bint vectors=True):
    """Eigenvalues (ascending) and column eigenvectors of symmetric ``a``.

    Returns ``(w, v)``; ``v`` is None when ``vectors`` is False.
    Raises ArithmeticError if QL fails to converge.
    """
    V_arr = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = V_arr.shape[0]
    d_arr = np.zeros(n)
    e_arr = np.zeros(n)
    if n == 0:
        return d_arr, (V_arr if vectors else None)
    if n == 1:
        d_arr[0] = V_arr[0, 0]
        return d_arr, (np.ones((1, 1)) if vectors else None)
    cdef double[:, ::1] V = V_arr
    cdef double[::1] d = d_arr
    cdef double[::1] e = e_arr
    cdef double[:, ::1] W
    cdef int status
    with nogil:
        _tred2(V, d, e, vectors)
    if vectors:
        W_arr = np.ascontiguousarray(V_arr.T)
    else:
        W_arr = V_arr
    W = W_arr
    with nogil:
        status = _tql2(W, d, e, vectors)
    if status != 0:
        raise ArithmeticError("implicit QL did not converge")
    return d_arr, (np.ascontiguousarray(W_arr.T) if vectors else None)


def pairwise_sq_dists(x):
    """All-pairs squared Euclidean distances of the rows of ``x`` (N x d)."""
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], dim = X.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] out = np.zeros((n, n))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(dim):
                    diff = X[i, k] - X[j, k]
                    acc = acc + diff * diff
                D[i, j] = acc
                D[j, i] = acc
    return out
