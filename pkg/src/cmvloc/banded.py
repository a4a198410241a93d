"""Banded LU with partial pivoting in compact storage.

Row i of a compact array C holds A[i, i-kl .. i+ku+kl]: C[i, j - i + kl] = A[i, j].
The extra kl columns on the right absorb fill-in from row swaps.
"""
import math

import numba
import numpy as np


def compact_from_diagonals(diags, kl, ku):
    """diags[:, d + kl] = A[i, i+d] for d in -kl..ku, shape (n, kl+ku+1)."""
    n = diags.shape[0]
    c = np.zeros((n, 2 * kl + ku + 1), complex)
    c[:, : kl + ku + 1] = diags
    return c


def compact_from_dense(a, kl, ku):
    n = a.shape[0]
    c = np.zeros((n, 2 * kl + ku + 1), complex)
    for d in range(-kl, ku + 1):
        i = np.arange(max(0, -d), min(n, n - d))
        c[i, d + kl] = a[i, i + d]
    return c


@numba.njit(cache=True)
def band_lu(c, kl, ku):
    """In-place LU of the compact matrix; returns (pivots, multipliers, singular).

    multipliers[k, t] is the elimination factor for row k+1+t at step k.
    """
    n = c.shape[0]
    w = kl + ku
    piv = np.zeros(n, np.int64)
    mult = np.zeros((n, max(kl, 1)), np.complex128)
    singular = False
    for k in range(n):
        p = k
        best = abs(c[k, kl])
        for i in range(k + 1, min(n, k + kl + 1)):
            v = abs(c[i, k - i + kl])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if p != k:
            for j in range(k, min(n, k + w + 1)):
                t = c[k, j - k + kl]
                c[k, j - k + kl] = c[p, j - p + kl]
                c[p, j - p + kl] = t
        d = c[k, kl]
        if d == 0:
            singular = True
            continue
        for i in range(k + 1, min(n, k + kl + 1)):
            f = c[i, k - i + kl] / d
            mult[k, i - k - 1] = f
            if f != 0:
                c[i, k - i + kl] = 0
                for j in range(k + 1, min(n, k + w + 1)):
                    c[i, j - i + kl] -= f * c[k, j - k + kl]
    return piv, mult, singular


@numba.njit(cache=True)
def band_logdet(c, kl, ku):
    """(log|det|, phase) from a compact matrix (copied)."""
    work = c.copy()
    piv, mult, singular = band_lu(work, kl, ku)
    n = c.shape[0]
    logm = 0.0
    ph = 1.0 + 0j
    for k in range(n):
        d = work[k, kl]
        if d == 0:
            return -math.inf, 1.0 + 0j
        a = abs(d)
        logm += math.log(a)
        ph *= d / a
        if piv[k] != k:
            ph = -ph
        # keep the phase on the unit circle
        ph /= abs(ph)
    return logm, ph


@numba.njit(cache=True)
def band_solve(c, kl, ku, rhs):
    """Solve A x = rhs for one or more right-hand sides (n, m)."""
    work = c.copy()
    piv, mult, singular = band_lu(work, kl, ku)
    n = c.shape[0]
    x = rhs.copy()
    if singular:
        x[:, :] = np.nan
        return x
    w = kl + ku
    for k in range(n):
        p = piv[k]
        if p != k:
            for s in range(x.shape[1]):
                t = x[k, s]
                x[k, s] = x[p, s]
                x[p, s] = t
        for i in range(k + 1, min(n, k + kl + 1)):
            f = mult[k, i - k - 1]
            if f != 0:
                for s in range(x.shape[1]):
                    x[i, s] -= f * x[k, s]
    for k in range(n - 1, -1, -1):
        for s in range(x.shape[1]):
            acc = x[k, s]
            for j in range(k + 1, min(n, k + w + 1)):
                acc -= work[k, j - k + kl] * x[j, s]
            x[k, s] = acc / work[k, kl]
    return x
