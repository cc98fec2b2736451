"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same algorithms, same signatures. The Householder reduction is vectorized
with numpy; the QL sweep stays a scalar loop with numpy row rotations.
"""

import math

import numpy as np

MAX_QL_ITER = 60
_EPS = 2.0 ** -52


def _tred2(V, vectors):
    n = V.shape[0]
    d = V[n - 1].copy()
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        scale = np.abs(d[:i]).sum()
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
            V[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h -= f * g
            d[i - 1] = f - g
            V[:i, i] = d[:i]
            lower = np.tril(V[:i, :i])
            e[:i] = lower.T @ d[:i] + np.tril(V[:i, :i], -1) @ d[:i]
            e[:i] /= h
            hh = float(e[:i] @ d[:i]) / (h + h)
            e[:i] -= hh * d[:i]
            upd = np.outer(e[:i], d[:i]) + np.outer(d[:i], e[:i])
            V[:i, :i] -= np.tril(upd)
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
        d[i] = h

    if not vectors:
        return np.diag(V).copy(), e

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            col = V[: i + 1, i + 1].copy()
            g = V[: i + 1, : i + 1].T @ col
            V[: i + 1, : i + 1] -= np.outer(col / h, g)
        V[: i + 1, i + 1] = 0.0
    d = V[n - 1].copy()
    V[n - 1] = 0.0
    V[n - 1, n - 1] = 1.0
    return d, e


def _tql2(W, d, e, vectors):
    n = len(d)
    d = [float(v) for v in d]
    e = [float(v) for v in e[1:]] + [0.0]
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n and abs(e[m]) > _EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > MAX_QL_ITER:
                    raise ArithmeticError("implicit QL did not converge")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    if vectors:
                        wi = W[i].copy()
                        W[i] = c * wi - s * W[i + 1]
                        W[i + 1] = s * wi + c * W[i + 1]
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= _EPS * tst1:
                    break
        d[l] += f
        e[l] = 0.0

    w = np.array(d)
    order = np.argsort(w, kind="stable")
    return w[order], (W[order] if vectors else None)


def eigh_tridiag_ql(a, vectors=True):
    """Eigenvalues (ascending) and column eigenvectors of symmetric ``a``.

    Returns ``(w, v)``; ``v`` is None when ``vectors`` is False.
    Raises ArithmeticError if QL fails to converge.
    """
    V = np.array(a, dtype=np.float64, order="C", copy=True)
    n = V.shape[0]
    if n == 0:
        return np.zeros(0), (V if vectors else None)
    if n == 1:
        return np.array([V[0, 0]]), (np.ones((1, 1)) if vectors else None)
    d, e = _tred2(V, vectors)
    W = np.ascontiguousarray(V.T) if vectors else None
    w, W = _tql2(W, d, e, vectors)
    return w, (np.ascontiguousarray(W.T) if vectors else None)


def pairwise_sq_dists(x):
    """All-pairs squared Euclidean distances of the rows of ``x`` (N x d)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n - 1):
        diff = x[i + 1:] - x[i]
        row = np.einsum("ij,ij->i", diff, diff)
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out
