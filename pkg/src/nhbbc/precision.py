"""Extended-precision refinement of the smallest singular triplets.

Zero singular values of topological chains decay like ``|eta|**-N`` and drop
below double-precision resolution (about ``1e-16 ||H||``) already for
moderate ``N``.  The routines here run subspace inverse iteration on
``H^dagger H`` with banded LU factorizations in ``mpmath`` arithmetic, so
exponentially small singular values and their vectors are resolved to full
double accuracy.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def bandwidths(a, tol=0.0):
    """Lower and upper bandwidth of a dense matrix."""
    r, c = np.nonzero(np.abs(a) > tol)
    if r.size == 0:
        return 0, 0
    d = c - r
    return int(max(-d.min(), 0)), int(max(d.max(), 0))


def _band_lu(rows, n, kl, ku):
    """Banded LU with partial pivoting on a list of row dicts.

    Multipliers are kept per elimination step, unaffected by later row
    swaps, so the solve interleaves swaps and eliminations.
    """
    piv = list(range(n))
    lower = [None] * n
    ub = kl + ku
    for j in range(n):
        last = min(j + kl, n - 1)
        p = max(range(j, last + 1), key=lambda i: abs(rows[i].get(j, 0)))
        if p != j:
            rows[j], rows[p] = rows[p], rows[j]
        piv[j] = p
        d = rows[j].get(j, 0)
        if d == 0:
            raise ZeroDivisionError("exactly singular band matrix")
        mult = {}
        rj = rows[j]
        for i in range(j + 1, last + 1):
            a = rows[i].pop(j, 0)
            if a == 0:
                continue
            f = a / d
            mult[i] = f
            ri = rows[i]
            for c in range(j + 1, min(j + ub, n - 1) + 1):
                v = rj.get(c, 0)
                if v:
                    ri[c] = ri.get(c, 0) - f * v
        lower[j] = mult
    return rows, piv, lower, ub


def _band_solve(fact, b):
    rows, piv, lower, ub = fact
    n = len(rows)
    x = list(b)
    for j in range(n):
        p = piv[j]
        if p != j:
            x[j], x[p] = x[p], x[j]
        xj = x[j]
        for i, f in lower[j].items():
            x[i] -= f * xj
    for j in range(n - 1, -1, -1):
        s = x[j]
        rj = rows[j]
        for c in range(j + 1, min(j + ub, n - 1) + 1):
            v = rj.get(c, 0)
            if v:
                s -= v * x[c]
        x[j] = s / rj[j]
    return x


def _to_rows(a, conj_transpose=False):
    if conj_transpose:
        a = a.conj().T
    rows = []
    for i in range(a.shape[0]):
        nz = np.flatnonzero(a[i])
        rows.append({int(j): mpmath.mpc(complex(a[i, j])) for j in nz})
    return rows


def _matvec(rows, x):
    return [mpmath.fsum(v * x[j] for j, v in r.items()) for r in rows]


def _dot(a, b):
    return mpmath.fsum(mpmath.conj(p) * q for p, q in zip(a, b))


def _orthonormalize(vecs):
    out = []
    for z in vecs:
        for _ in range(2):
            for q in out:
                c = _dot(q, z)
                z = [b - c * a for a, b in zip(q, z)]
        nrm = mpmath.sqrt(mpmath.fsum(abs(a) ** 2 for a in z))
        out.append([a / nrm for a in z])
    return out


def _refine_at(a, x0, dps, iters):
    n = a.shape[0]
    kl, ku = bandwidths(a)
    count = x0.shape[1]
    with mpmath.workdps(dps):
        H = _to_rows(a)
        Ha = _to_rows(a, conj_transpose=True)
        F = _band_lu([dict(r) for r in H], n, kl, ku)
        Fa = _band_lu([dict(r) for r in Ha], n, ku, kl)
        X = [[mpmath.mpc(complex(z)) for z in x0[:, j]] for j in range(count)]
        X = _orthonormalize(X)
        for _ in range(iters):
            X = _orthonormalize([_band_solve(F, _band_solve(Fa, x)) for x in X])
        B = [_matvec(H, x) for x in X]
        G = mpmath.matrix(count, count)
        for i in range(count):
            for j in range(count):
                G[i, j] = _dot(B[i], B[j])
        E, W = mpmath.eighe(G)
        sig = [mpmath.sqrt(max(E[j].real, 0)) for j in range(count)]
        floor = mpmath.sqrt(max(abs(E[j]) for j in range(count))) * mpmath.mpf(10) ** (-dps // 2 + 5)
        V = np.empty((n, count), dtype=complex)
        U = np.empty((n, count), dtype=complex)
        for j in range(count):
            v = [mpmath.fsum(W[i, j] * X[i][m] for i in range(count)) for m in range(n)]
            u = _matvec(H, v)
            if sig[j] > floor:
                u = [z / sig[j] for z in u]
            else:
                # Ritz value below the working precision of G: use
                # H^dagger u = sigma v, i.e. u = sigma (H^dagger)^-1 v
                w = _band_solve(Fa, v)
                nw = mpmath.sqrt(mpmath.fsum(abs(z) ** 2 for z in w))
                sig[j] = 1 / nw
                u = [z / nw for z in w]
            V[:, j] = [complex(z) for z in v]
            U[:, j] = [complex(z) for z in u]
        return np.array([float(s) for s in sig]), U, V


def refine_smallest(a, x0, dps=None, iters=3, max_rounds=4):
    """Refine the smallest singular triplets of a banded matrix.

    Parameters
    ----------
    a : (N, N) complex ndarray
        Banded matrix.
    x0 : (N, r) complex ndarray
        Starting guesses for the ``r`` smallest right singular vectors,
        usually taken from a double-precision SVD.
    dps : int, optional
        Working decimal digits.  By default chosen from the magnitude of the
        singular values and increased until the results stop changing.

    Returns
    -------
    sigma : (r,) ndarray
        Singular values in ascending order.
    U, V : (N, r) ndarray
        Left and right singular vectors with ``a @ V = U * sigma``.
    """
    x0 = np.asarray(x0, dtype=complex).reshape(a.shape[0], -1)
    scale = float(np.abs(a).max()) or 1.0
    dps = 40 if dps is None else int(dps)
    prev = None
    for _ in range(max_rounds):
        sig, U, V = _refine_at(a, x0, dps, iters)
        smin = sig.min() if sig.size else scale
        need = int(30 + max(0.0, -math.log10(max(smin / scale, 1e-300))))
        if prev is not None and need <= dps and np.allclose(sig, prev, rtol=1e-13, atol=0):
            break
        prev = sig
        x0 = V
        dps = max(need, dps + 10)
    return sig, U, V
