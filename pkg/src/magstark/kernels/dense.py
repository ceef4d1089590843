"""Dense complex eigen-kernels: Householder Hessenberg reduction, shifted QR
(Wilkinson shift, Givens sweeps), triangular eigenvectors and Hessenberg
solves for inverse iteration.
"""
import numpy as np

from .._jit import USE_NUMBA, njit

EPS = np.finfo(float).eps


class QRNoConvergence(RuntimeError):
    pass


# ---------------------------------------------------------------- Hessenberg

@njit
def _hessenberg_nb(A, W):
    """A <- Q^H A Q in place.  Reflector k (I - 2 w w^H) is stored in W[k, k+1:]."""
    n = A.shape[0]
    for k in range(n - 2):
        nrm2 = 0.0
        for i in range(k + 1, n):
            nrm2 += A[i, k].real ** 2 + A[i, k].imag ** 2
        nrm = np.sqrt(nrm2)
        x0 = A[k + 1, k]
        if nrm == 0.0:
            continue
        ph = x0 / abs(x0) if abs(x0) > 0 else 1.0 + 0j
        for i in range(k + 1, n):
            W[k, i] = A[i, k]
        W[k, k + 1] += ph * nrm
        wn = 0.0
        for i in range(k + 1, n):
            wn += W[k, i].real ** 2 + W[k, i].imag ** 2
        wn = np.sqrt(wn)
        for i in range(k + 1, n):
            W[k, i] /= wn
        # left: A[k+1:, k:] -= 2 w (w^H A)
        for j in range(k, n):
            s = 0j
            for i in range(k + 1, n):
                s += np.conj(W[k, i]) * A[i, j]
            s *= 2.0
            for i in range(k + 1, n):
                A[i, j] -= W[k, i] * s
        # right: A[:, k+1:] -= 2 (A w) w^H
        for i in range(n):
            s = 0j
            for j in range(k + 1, n):
                s += A[i, j] * W[k, j]
            s *= 2.0
            for j in range(k + 1, n):
                A[i, j] -= s * np.conj(W[k, j])
        for i in range(k + 2, n):
            A[i, k] = 0.0


def _hessenberg_np(A, W):
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1:, k]
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            continue
        x0 = x[0]
        ph = x0 / abs(x0) if abs(x0) > 0 else 1.0
        w = x.copy()
        w[0] += ph * nrm
        w /= np.linalg.norm(w)
        W[k, k + 1:] = w
        A[k + 1:, k:] -= 2.0 * np.outer(w, w.conj() @ A[k + 1:, k:])
        A[:, k + 1:] -= 2.0 * np.outer(A[:, k + 1:] @ w, w.conj())
        A[k + 2:, k] = 0.0


def hessenberg(A):
    """Return ``(H, W)`` with ``H = Q^H A Q``; ``W`` holds the reflectors."""
    H = np.array(A, dtype=np.complex128, order="C")
    W = np.zeros_like(H)
    (_hessenberg_nb if USE_NUMBA else _hessenberg_np)(H, W)
    return H, W


def apply_q(W, X):
    """Multiply by ``Q = P_0 P_1 ... P_{n-3}`` (``X`` columns, returned new)."""
    X = np.array(X, dtype=np.complex128)
    n = W.shape[0]
    for k in range(n - 3, -1, -1):
        w = W[k, k + 1:]
        if not w.any():
            continue
        X[k + 1:] -= 2.0 * np.outer(w, w.conj() @ X[k + 1:])
    return X


# ---------------------------------------------------------------- QR

@njit
def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1 = 0.5 * (a + d) + disc
    m2 = 0.5 * (a + d) - disc
    return m1 if abs(m1 - d) < abs(m2 - d) else m2


@njit
def _schur_nb(H, Z, want_z, maxit):
    """Complex Schur form of upper Hessenberg H in place.  Returns status
    (0 ok, 1 no convergence)."""
    n = H.shape[0]
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(H[i, j]))
    if hnorm == 0.0:
        return 0
    hi = n - 1
    its = 0
    total = 0
    while hi > 0:
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = hnorm
            if abs(H[l, l - 1]) <= EPS * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if total > maxit:
            return 1
        if its % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        jmax = n - 1 if want_z else hi
        i0 = 0 if want_z else l
        x = H[l, l] - mu
        y = H[l + 1, l]
        for k in range(l, hi):
            if k > l:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            ax = abs(x)
            r = np.hypot(ax, abs(y))
            if r == 0.0:
                c = 1.0
                s = 0j
            elif ax == 0.0:
                c = 0.0
                s = np.conj(y) / abs(y)
            else:
                c = ax / r
                s = (x / ax) * np.conj(y) / r
            j0 = k - 1 if k > l else l
            for j in range(j0, jmax + 1):
                a = H[k, j]
                b = H[k + 1, j]
                H[k, j] = c * a + s * b
                H[k + 1, j] = -np.conj(s) * a + c * b
            if k > l:
                H[k + 1, k - 1] = 0.0
            imax = min(k + 2, hi)
            for i in range(i0, imax + 1):
                a = H[i, k]
                b = H[i, k + 1]
                H[i, k] = a * c + b * np.conj(s)
                H[i, k + 1] = -a * s + b * c
            if want_z:
                for i in range(n):
                    a = Z[i, k]
                    b = Z[i, k + 1]
                    Z[i, k] = a * c + b * np.conj(s)
                    Z[i, k + 1] = -a * s + b * c
    return 0


def _schur_np(H, Z, want_z, maxit):
    n = H.shape[0]
    hnorm = np.abs(H).max() if n else 0.0
    if hnorm == 0.0:
        return 0
    hi = n - 1
    its = 0
    total = 0
    while hi > 0:
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = hnorm
            if abs(H[l, l - 1]) <= EPS * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if total > maxit:
            return 1
        if its % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        jmax = n - 1 if want_z else hi
        i0 = 0 if want_z else l
        x = H[l, l] - mu
        y = H[l + 1, l]
        for k in range(l, hi):
            if k > l:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            ax = abs(x)
            r = np.hypot(ax, abs(y))
            if r == 0.0:
                c, s = 1.0, 0j
            elif ax == 0.0:
                c, s = 0.0, np.conj(y) / abs(y)
            else:
                c, s = ax / r, (x / ax) * np.conj(y) / r
            j0 = k - 1 if k > l else l
            rows = H[k:k + 2, j0:jmax + 1]
            a, b = rows[0].copy(), rows[1].copy()
            rows[0] = c * a + s * b
            rows[1] = -np.conj(s) * a + c * b
            if k > l:
                H[k + 1, k - 1] = 0.0
            imax = min(k + 2, hi)
            cols = H[i0:imax + 1, k:k + 2]
            a, b = cols[:, 0].copy(), cols[:, 1].copy()
            cols[:, 0] = a * c + b * np.conj(s)
            cols[:, 1] = -a * s + b * c
            if want_z:
                a, b = Z[:, k].copy(), Z[:, k + 1].copy()
                Z[:, k] = a * c + b * np.conj(s)
                Z[:, k + 1] = -a * s + b * c
    return 0


def schur_hessenberg(H, want_z=True, maxit=None):
    """Complex Schur form ``H = Z T Z^H`` of an upper Hessenberg matrix."""
    T = np.array(H, dtype=np.complex128, order="C")
    n = T.shape[0]
    Z = np.eye(n, dtype=np.complex128) if want_z else np.zeros((1, 1), np.complex128)
    maxit = 30 * max(n, 1) if maxit is None else maxit
    f = _schur_nb if USE_NUMBA else _schur_np
    if f(T, Z, want_z, maxit):
        raise QRNoConvergence(f"QR iteration did not converge in {maxit} sweeps")
    return T, (Z if want_z else None)


# ---------------------------------------------------------------- vectors

@njit
def _triangular_vectors_nb(T, small):
    n = T.shape[0]
    Y = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        Y[k, k] = 1.0
        lam = T[k, k]
        for i in range(k - 1, -1, -1):
            s = 0j
            for j in range(i + 1, k + 1):
                s += T[i, j] * Y[j, k]
            d = T[i, i] - lam
            if abs(d) < small:
                d = small
            Y[i, k] = -s / d
        m = 0.0
        for i in range(k + 1):
            m = max(m, abs(Y[i, k]))
        if m > 1e100:
            for i in range(k + 1):
                Y[i, k] /= m
    return Y


def _triangular_vectors_np(T, small):
    n = T.shape[0]
    Y = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        Y[k, k] = 1.0
        lam = T[k, k]
        for i in range(k - 1, -1, -1):
            d = T[i, i] - lam
            if abs(d) < small:
                d = small
            Y[i, k] = -(T[i, i + 1:k + 1] @ Y[i + 1:k + 1, k]) / d
        m = np.abs(Y[:k + 1, k]).max()
        if m > 1e100:
            Y[:k + 1, k] /= m
    return Y


def triangular_eigenvectors(T):
    small = EPS * max(np.abs(T).max(), np.finfo(float).tiny)
    f = _triangular_vectors_nb if USE_NUMBA else _triangular_vectors_np
    return f(np.ascontiguousarray(T), small)


@njit
def _hess_solve_nb(H, lam, b, small):
    """Solve (H - lam I) x = b for upper Hessenberg H (partial pivoting)."""
    n = H.shape[0]
    U = H.copy()
    for i in range(n):
        U[i, i] -= lam
    x = b.copy()
    for k in range(n - 1):
        if abs(U[k + 1, k]) > abs(U[k, k]):
            for j in range(k, n):
                t = U[k, j]
                U[k, j] = U[k + 1, j]
                U[k + 1, j] = t
            t = x[k]
            x[k] = x[k + 1]
            x[k + 1] = t
        if U[k, k] == 0:
            U[k, k] = small
        f = U[k + 1, k] / U[k, k]
        if f != 0:
            for j in range(k + 1, n):
                U[k + 1, j] -= f * U[k, j]
            x[k + 1] -= f * x[k]
    for k in range(n - 1, -1, -1):
        s = x[k]
        for j in range(k + 1, n):
            s -= U[k, j] * x[j]
        d = U[k, k]
        if abs(d) < small:
            d = small
        x[k] = s / d
    return x


def _hess_solve_np(H, lam, b, small):
    n = H.shape[0]
    U = H - lam * np.eye(n)
    x = b.copy()
    for k in range(n - 1):
        if abs(U[k + 1, k]) > abs(U[k, k]):
            U[[k, k + 1], k:] = U[[k + 1, k], k:]
            x[k], x[k + 1] = x[k + 1], x[k]
        if U[k, k] == 0:
            U[k, k] = small
        f = U[k + 1, k] / U[k, k]
        if f != 0:
            U[k + 1, k + 1:] -= f * U[k, k + 1:]
            x[k + 1] -= f * x[k]
    for k in range(n - 1, -1, -1):
        d = U[k, k]
        if abs(d) < small:
            d = small
        x[k] = (x[k] - U[k, k + 1:] @ x[k + 1:]) / d
    return x


def hessenberg_solve(H, lam, b):
    small = EPS * max(np.abs(H).max(), np.finfo(float).tiny)
    f = _hess_solve_nb if USE_NUMBA else _hess_solve_np
    return f(np.ascontiguousarray(H, dtype=np.complex128), complex(lam),
             np.asarray(b, dtype=np.complex128).copy(), small)


@njit
def _hess_inverse_iteration_nb(H, lam, b, iters, small):
    """Factor ``H - lam I`` once (Hessenberg LU, partial pivoting) and run
    ``iters`` normalised inverse-iteration steps from ``b``."""
    n = H.shape[0]
    U = H.copy()
    for i in range(n):
        U[i, i] -= lam
    swap = np.zeros(n, dtype=np.bool_)
    mult = np.zeros(n, dtype=np.complex128)
    for k in range(n - 1):
        if abs(U[k + 1, k]) > abs(U[k, k]):
            swap[k] = True
            for j in range(k, n):
                t = U[k, j]
                U[k, j] = U[k + 1, j]
                U[k + 1, j] = t
        if U[k, k] == 0:
            U[k, k] = small
        f = U[k + 1, k] / U[k, k]
        mult[k] = f
        if f != 0:
            for j in range(k + 1, n):
                U[k + 1, j] -= f * U[k, j]
    x = b.copy()
    for _ in range(iters):
        for k in range(n - 1):
            if swap[k]:
                t = x[k]
                x[k] = x[k + 1]
                x[k + 1] = t
            x[k + 1] -= mult[k] * x[k]
        for k in range(n - 1, -1, -1):
            s = x[k]
            for j in range(k + 1, n):
                s -= U[k, j] * x[j]
            d = U[k, k]
            if abs(d) < small:
                d = small
            x[k] = s / d
        nrm = 0.0
        for k in range(n):
            nrm += x[k].real ** 2 + x[k].imag ** 2
        nrm = np.sqrt(nrm)
        for k in range(n):
            x[k] /= nrm
    return x


def _hess_inverse_iteration_np(H, lam, b, iters, small):
    x = b.copy()
    for _ in range(iters):
        x = _hess_solve_np(H, lam, x, small)
        x /= np.linalg.norm(x)
    return x


def hessenberg_inverse_iteration(H, lam, b, iters=3):
    small = EPS * max(np.abs(H).max(), np.finfo(float).tiny)
    f = _hess_inverse_iteration_nb if USE_NUMBA else _hess_inverse_iteration_np
    return f(np.ascontiguousarray(H, dtype=np.complex128), complex(lam),
             np.asarray(b, dtype=np.complex128).copy(), int(iters), small)
