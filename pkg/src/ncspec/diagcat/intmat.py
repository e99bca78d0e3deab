"""Exact integer matrix algorithms on Python integers.

Matrices travel as numpy arrays of ``dtype=object`` holding Python ``int``
so that products never overflow; the elimination loops work on lists of
lists for speed.
"""

from __future__ import annotations

import numpy as np


def intmat(rows, shape=None) -> np.ndarray:
    """Object-dtype integer matrix from nested sequences (or an array)."""
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        out = np.empty(rows.shape, dtype=object)
        for idx, x in np.ndenumerate(rows):
            out[idx] = int(x)
        return out
    rows = [list(r) for r in rows]
    if not rows:
        return np.empty(shape if shape is not None else (0, 0), dtype=object)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged integer matrix")
    out = np.empty((len(rows), width), dtype=object)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            if int(x) != x:
                raise ValueError(f"non-integer entry {x!r}")
            out[i, j] = int(x)
    return out


def identity(n: int) -> np.ndarray:
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = 1
    return out


def zeros(m: int, n: int) -> np.ndarray:
    out = np.empty((m, n), dtype=object)
    out.fill(0)
    return out


def as_lists(m: np.ndarray) -> list:
    return [[int(x) for x in row] for row in m]


def det(m) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = as_lists(intmat(m)) if not isinstance(m, list) else [list(r) for r in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _snf_lists(a: list, m: int, n: int):
    """Smith form of ``a`` (modified in place); returns ``(U, V, Vinv)`` as lists."""
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]
    vi = [[int(i == j) for j in range(n)] for i in range(n)]
    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                row = a[i]
                for j in range(t, n):
                    x = row[j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
                        if best[0] == 1:
                            break
                if best is not None and best[0] == 1:
                    break
            if best is None:
                return u, v, vi
            _, i, j = best
            if i != t:
                a[t], a[i] = a[i], a[t]
                u[t], u[i] = u[i], u[t]
            if j != t:
                for row in a:
                    row[t], row[j] = row[j], row[t]
                for row in v:
                    row[t], row[j] = row[j], row[t]
                vi[t], vi[j] = vi[j], vi[t]
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                x = a[i][t]
                if x:
                    q = x // p
                    ri, rt = a[i], a[t]
                    for c in range(t, n):
                        ri[c] -= q * rt[c]
                    ui, ut = u[i], u[t]
                    for c in range(m):
                        ui[c] -= q * ut[c]
                    if ri[t]:
                        dirty = True
            rt = a[t]
            for j in range(t + 1, n):
                x = rt[j]
                if x:
                    q = x // p
                    for r in range(t, m):
                        a[r][j] -= q * a[r][t]
                    for r in range(n):
                        v[r][j] -= q * v[r][t]
                    vt, vj = vi[t], vi[j]
                    for c in range(n):
                        vt[c] += q * vj[c]
                    if rt[j]:
                        dirty = True
            if dirty:
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if a[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            rt, rb = a[t], a[bad]
            for c in range(t, n):
                rt[c] += rb[c]
            ut, ub = u[t], u[bad]
            for c in range(m):
                ut[c] += ub[c]
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    return u, v, vi


def smith_normal_form(m) -> tuple:
    """``(U, D, V)`` with ``U @ M @ V == D`` diagonal, ``d_i | d_{i+1}``, ``U, V`` unimodular.

    Pivots are chosen as entries of minimal absolute value.

    >>> U, D, V = smith_normal_form([[2, 4], [6, 8]])
    >>> D.tolist()
    [[2, 0], [0, 4]]
    """
    mat = intmat(m)
    rows, cols = mat.shape
    a = as_lists(mat)
    u, v, _ = _snf_lists(a, rows, cols)
    return intmat(u, (rows, rows)), intmat(a, (rows, cols)), intmat(v, (cols, cols))


def snf_with_inverse(m) -> tuple:
    """Like :func:`smith_normal_form` but also returns ``V^{-1}``."""
    mat = intmat(m)
    rows, cols = mat.shape
    a = as_lists(mat)
    u, v, vi = _snf_lists(a, rows, cols)
    return (intmat(u, (rows, rows)), intmat(a, (rows, cols)), intmat(v, (cols, cols)),
            intmat(vi, (cols, cols)))


def diagonal_entries(d: np.ndarray) -> list:
    return [int(d[i, i]) for i in range(min(d.shape))]


def row_hnf(m) -> tuple:
    """Row-style Hermite normal form ``(H, W, W^{-1})`` with ``W @ M == H``.

    Pivots are positive and entries above each pivot lie in ``[0, pivot)``.
    """
    mat = intmat(m)
    r, n = mat.shape
    h = as_lists(mat)
    w = [[int(i == j) for j in range(r)] for i in range(r)]
    wi = [[int(i == j) for j in range(r)] for i in range(r)]
    t = 0
    for col in range(n):
        if t == r:
            break
        while True:
            nz = [i for i in range(t, r) if h[i][col]]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(h[i][col]))
            if i0 != t:
                h[t], h[i0] = h[i0], h[t]
                w[t], w[i0] = w[i0], w[t]
                for row in wi:
                    row[t], row[i0] = row[i0], row[t]
            done = True
            p = h[t][col]
            for i in range(t + 1, r):
                x = h[i][col]
                if x:
                    q = x // p
                    h[i] = [a - q * b for a, b in zip(h[i], h[t])]
                    w[i] = [a - q * b for a, b in zip(w[i], w[t])]
                    for row in wi:
                        row[t] += q * row[i]
                    if h[i][col]:
                        done = False
            if done:
                break
        if t >= r or h[t][col] == 0:
            continue
        if h[t][col] < 0:
            h[t] = [-x for x in h[t]]
            w[t] = [-x for x in w[t]]
            for row in wi:
                row[t] = -row[t]
        p = h[t][col]
        for i in range(t):
            q = h[i][col] // p
            if q:
                h[i] = [a - q * b for a, b in zip(h[i], h[t])]
                w[i] = [a - q * b for a, b in zip(w[i], w[t])]
                for row in wi:
                    row[t] += q * row[i]
        t += 1
    return intmat(h, (r, n)), intmat(w, (r, r)), intmat(wi, (r, r))


def integer_kernel(m) -> np.ndarray:
    """Columns forming a basis of ``{x : M x = 0}`` over the integers."""
    mat = intmat(m)
    rows, cols = mat.shape
    _, d, v = smith_normal_form(mat)
    rank = sum(1 for x in diagonal_entries(d) if x)
    return v[:, rank:]


def lattice_basis(cols) -> np.ndarray:
    """Basis (as columns) of the lattice spanned by the given columns."""
    mat = intmat(cols)
    if mat.shape[1] == 0:
        return mat
    h, _, _ = row_hnf(mat.T)
    keep = [i for i in range(h.shape[0]) if any(h[i, j] for j in range(h.shape[1]))]
    return h[keep].T


def solve_integer(a, b) -> np.ndarray | None:
    """Integer ``x`` with ``A x = b`` (``b`` a vector or matrix of columns), or None."""
    am = intmat(a)
    bm = intmat(np.asarray(b, dtype=object).reshape(am.shape[0], -1))
    u, d, v = smith_normal_form(am)
    rhs = u.dot(bm)
    diag = diagonal_entries(d)
    y = zeros(am.shape[1], bm.shape[1])
    for i in range(rhs.shape[0]):
        di = diag[i] if i < len(diag) else 0
        for c in range(bm.shape[1]):
            val = int(rhs[i, c])
            if di == 0:
                if val != 0:
                    return None
            else:
                if val % di:
                    return None
                y[i, c] = val // di
    return v.dot(y)
