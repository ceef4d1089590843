"""Banded LU (partial pivoting) and Hermitian LDL^H kernels.

General band storage follows the LAPACK layout: ``ab`` has shape
``(2*kl + ku + 1, n)`` in Fortran order and ``A[i, j]`` lives at
``ab[kv + i - j, j]`` with ``kv = kl + ku``.  The first ``kl`` rows are
fill-in space for the row interchanges.

The numpy forms walk the same elimination column by column but express the
rank-one updates on strided views of ``ab`` (a band column shift is a fixed
stride), so each column costs a handful of numpy calls.
"""
import numpy as np
from numpy.lib.stride_tricks import as_strided

from .._jit import USE_NUMBA, njit

EPS = np.finfo(float).eps


# ---------------------------------------------------------------- storage

def csr_bandwidths(indptr, indices):
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    if rows.size == 0:
        return 0, 0
    off = rows - indices
    return int(max(off.max(), 0)), int(max(-off.min(), 0))


@njit
def _csr_to_band_nb(indptr, indices, data, n, kl, ku, fill):
    kv = fill + ku
    ab = np.zeros((n, fill + kl + ku + 1), dtype=np.complex128).T
    for r in range(n):
        for p in range(indptr[r], indptr[r + 1]):
            c = indices[p]
            ab[kv + r - c, c] = data[p]
    return ab


def _csr_to_band_np(indptr, indices, data, n, kl, ku, fill):
    kv = fill + ku
    ab = np.zeros((fill + kl + ku + 1, n), dtype=np.complex128, order="F")
    rows = np.repeat(np.arange(n), np.diff(indptr))
    ab[kv + rows - indices, indices] = data
    return ab


def csr_to_band(indptr, indices, data, n, kl, ku, fill=None):
    """General band array; ``fill`` extra rows on top (default ``kl``)."""
    fill = kl if fill is None else fill
    args = (np.asarray(indptr, np.int64), np.asarray(indices, np.int64),
            np.asarray(data, np.complex128), int(n), int(kl), int(ku), int(fill))
    if USE_NUMBA:
        ab = _csr_to_band_nb(*args)
        return np.asfortranarray(ab)
    return _csr_to_band_np(*args)


def _shift_view(ab, r0, c0, nr, nc):
    """View ``V[i, c] = ab[r0 + i - c, c0 + c]`` (no bounds checking)."""
    base = ab[r0:, c0:]
    sr, sc = ab.strides
    return as_strided(base, shape=(nr, nc), strides=(sr, sc - sr))


# ---------------------------------------------------------------- LU

@njit
def _lu_nb(ab, kl, ku, thresh):
    n = ab.shape[1]
    kv = kl + ku
    piv = np.zeros(n, dtype=np.int64)
    info = 0
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = 0
        best = abs(ab[kv, j])
        for i in range(1, km + 1):
            v = abs(ab[kv + i, j])
            if v > best:
                best = v
                p = i
        piv[j] = j + p
        if best <= thresh and info == 0:
            info = j + 1
        if best == 0.0:
            continue
        ju = max(ju, min(j + ku + p, n - 1))
        if p != 0:
            for c in range(j, ju + 1):
                t = ab[kv + j - c, c]
                ab[kv + j - c, c] = ab[kv + j + p - c, c]
                ab[kv + j + p - c, c] = t
        if km > 0:
            inv = 1.0 / ab[kv, j]
            for i in range(1, km + 1):
                ab[kv + i, j] *= inv
            for c in range(j + 1, ju + 1):
                u = ab[kv + j - c, c]
                if u != 0:
                    off = kv + j - c
                    for i in range(1, km + 1):
                        ab[off + i, c] -= ab[kv + i, j] * u
    return piv, info


def _lu_np(ab, kl, ku, thresh):
    n = ab.shape[1]
    kv = kl + ku
    sr, sc = ab.strides
    piv = np.zeros(n, dtype=np.int64)
    info = 0
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        col = ab[kv:kv + km + 1, j]
        p = int(np.argmax(np.abs(col)))
        best = abs(col[p])
        piv[j] = j + p
        if best <= thresh and info == 0:
            info = j + 1
        if best == 0.0:
            continue
        ju = max(ju, min(j + ku + p, n - 1))
        nc = ju - j + 1
        if p != 0:
            ra = as_strided(ab[kv:, j:], shape=(nc,), strides=(sc - sr,))
            rb = as_strided(ab[kv + p:, j:], shape=(nc,), strides=(sc - sr,))
            t = ra.copy()
            ra[:] = rb
            rb[:] = t
        if km > 0:
            l = ab[kv + 1:kv + km + 1, j]
            l *= 1.0 / ab[kv, j]
            if nc > 1:
                u = as_strided(ab[kv - 1:, j + 1:], shape=(nc - 1,),
                               strides=(sc - sr,))
                blk = _shift_view(ab, kv, j + 1, km, nc - 1)
                blk -= np.outer(l, u)
    return piv, info


def lu_factor(ab, kl, ku, anorm):
    """In-place LU of a general band array; returns ``(piv, info)``.

    ``info > 0`` flags the first column whose pivot fell below
    ``10 * eps * anorm`` (numerically singular).
    """
    thresh = 10.0 * EPS * anorm
    if USE_NUMBA:
        return _lu_nb(ab, int(kl), int(ku), thresh)
    return _lu_np(ab, int(kl), int(ku), thresh)


@njit
def _lu_solve_nb(ab, kl, ku, piv, b):
    n = ab.shape[1]
    kv = kl + ku
    x = b.copy()
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = piv[j]
        if p != j:
            t = x[j]
            x[j] = x[p]
            x[p] = t
        xj = x[j]
        if xj != 0:
            for i in range(1, km + 1):
                x[j + i] -= ab[kv + i, j] * xj
    for j in range(n - 1, -1, -1):
        x[j] /= ab[kv, j]
        xj = x[j]
        lo = max(0, j - kv)
        for i in range(lo, j):
            x[i] -= ab[kv + i - j, j] * xj
    return x


@njit
def _lu_solve_h_nb(ab, kl, ku, piv, b):
    n = ab.shape[1]
    kv = kl + ku
    x = b.copy()
    for j in range(n):
        lo = max(0, j - kv)
        s = x[j]
        for i in range(lo, j):
            s -= np.conj(ab[kv + i - j, j]) * x[i]
        x[j] = s / np.conj(ab[kv, j])
    for j in range(n - 2, -1, -1):
        km = min(kl, n - 1 - j)
        s = x[j]
        for i in range(1, km + 1):
            s -= np.conj(ab[kv + i, j]) * x[j + i]
        x[j] = s
        p = piv[j]
        if p != j:
            t = x[j]
            x[j] = x[p]
            x[p] = t
    return x


def _lu_solve_np(ab, kl, ku, piv, b):
    n = ab.shape[1]
    kv = kl + ku
    x = b.astype(np.complex128, copy=True)
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = piv[j]
        if p != j:
            x[j], x[p] = x[p], x[j]
        if km:
            x[j + 1:j + km + 1] -= ab[kv + 1:kv + km + 1, j] * x[j]
    for j in range(n - 1, -1, -1):
        x[j] /= ab[kv, j]
        lo = max(0, j - kv)
        if lo < j:
            x[lo:j] -= ab[kv - (j - lo):kv, j] * x[j]
    return x


def _lu_solve_h_np(ab, kl, ku, piv, b):
    n = ab.shape[1]
    kv = kl + ku
    x = b.astype(np.complex128, copy=True)
    for j in range(n):
        lo = max(0, j - kv)
        s = x[j] - np.dot(np.conj(ab[kv - (j - lo):kv, j]), x[lo:j])
        x[j] = s / np.conj(ab[kv, j])
    for j in range(n - 2, -1, -1):
        km = min(kl, n - 1 - j)
        x[j] -= np.dot(np.conj(ab[kv + 1:kv + km + 1, j]), x[j + 1:j + km + 1])
        p = piv[j]
        if p != j:
            x[j], x[p] = x[p], x[j]
    return x


def lu_solve(ab, kl, ku, piv, b, conjugate_transpose=False):
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if USE_NUMBA:
        f = _lu_solve_h_nb if conjugate_transpose else _lu_solve_nb
    else:
        f = _lu_solve_h_np if conjugate_transpose else _lu_solve_np
    return f(ab, int(kl), int(ku), piv, b)


# ---------------------------------------------------------------- LDL^H

@njit
def _ldlh_nb(lb, thresh):
    """Lower band Hermitian ``lb[i - j, j] = A[i, j]``; returns D."""
    bw = lb.shape[0] - 1
    n = lb.shape[1]
    d = np.zeros(n)
    info = 0
    for j in range(n):
        dj = lb[0, j].real
        d[j] = dj
        if abs(dj) <= thresh:
            if info == 0:
                info = j + 1
            if dj == 0.0:
                continue
        m = min(bw, n - 1 - j)
        for k in range(1, m + 1):
            f = np.conj(lb[k, j]) / dj
            if f != 0:
                for i in range(k, m + 1):
                    lb[i - k, j + k] -= lb[i, j] * f
        for i in range(1, m + 1):
            lb[i, j] /= dj
    return d, info


def _ldlh_np(lb, thresh):
    # Unpivoted LU on the full band; for Hermitian A its pivots are D.
    bw = lb.shape[0] - 1
    n = lb.shape[1]
    ab = np.zeros((2 * bw + 1, n), dtype=np.complex128, order="F")
    ab[bw:, :] = lb
    for k in range(1, bw + 1):
        ab[bw - k, k:] = np.conj(lb[k, :n - k])
    d = np.zeros(n)
    info = 0
    for j in range(n):
        dj = ab[bw, j].real
        d[j] = dj
        if abs(dj) <= thresh:
            if info == 0:
                info = j + 1
            if dj == 0.0:
                continue
        m = min(bw, n - 1 - j)
        if m:
            l = ab[bw + 1:bw + m + 1, j] / dj
            u = as_strided(ab[bw - 1:, j + 1:], shape=(m,),
                           strides=(ab.strides[1] - ab.strides[0],))
            blk = _shift_view(ab, bw, j + 1, m, m)
            blk -= np.outer(l, u)
    return d, info


def ldlh_diagonal(lb, anorm):
    """Pivots D of the unpivoted LDL^H factorisation (in place on ``lb``)."""
    thresh = 10.0 * EPS * anorm
    if USE_NUMBA:
        return _ldlh_nb(lb, thresh)
    return _ldlh_np(lb, thresh)


@njit
def _csr_to_lower_band_nb(indptr, indices, data, n, bw):
    lb = np.zeros((n, bw + 1), dtype=np.complex128).T
    for r in range(n):
        for p in range(indptr[r], indptr[r + 1]):
            c = indices[p]
            if r >= c:
                lb[r - c, c] = data[p]
    return lb


def csr_to_lower_band(indptr, indices, data, n, bw):
    if USE_NUMBA:
        lb = _csr_to_lower_band_nb(np.asarray(indptr, np.int64),
                                   np.asarray(indices, np.int64),
                                   np.asarray(data, np.complex128), int(n), int(bw))
        return np.asfortranarray(lb)
    lb = np.zeros((bw + 1, n), dtype=np.complex128, order="F")
    rows = np.repeat(np.arange(n), np.diff(indptr))
    keep = rows >= indices
    lb[(rows - indices)[keep], indices[keep]] = np.asarray(data)[keep]
    return lb
