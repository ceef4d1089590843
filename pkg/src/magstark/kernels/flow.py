"""Dormand-Prince 5(4) integration of the Hamilton equations with escape
detection, batched over initial states.

status codes: 0 ran to ``t_end`` (trapped), 1 escaped, 2 step-size
underflow or step budget exhausted.
"""
import numpy as np

from .._jit import USE_NUMBA, njit
from .fields import value_grad, value_grad_nb

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200,
               187 / 2100, 1 / 40])
E = B5 - B4


@njit
def _rhs_nb(terms, Bf, s, out):
    _, vx, vy = value_grad_nb(terms, s[0], s[1])
    u = s[2] + Bf * s[1]
    out[0] = u
    out[1] = s[3]
    out[2] = -1.0 - vx
    out[3] = -Bf * u - vy


@njit
def _dp45_nb(terms, Bf, s0, t_end, tol, r_esc, x_esc, max_steps):
    s = s0.copy()
    K = np.zeros((7, 4))
    tmp = np.zeros(4)
    snew = np.zeros(4)
    t = 0.0
    direction = 1.0 if t_end >= 0 else -1.0
    span = abs(t_end)
    h = min(0.05, span) if span > 0 else 0.0
    rmax = np.hypot(s[0], s[1])
    if span == 0.0:
        return s, 0, 0.0, rmax
    _rhs_nb(terms, Bf, s, K[0])
    steps = 0
    while t < span:
        if steps >= max_steps:
            return s, 2, t * direction, rmax
        if h < 1e-14 * max(1.0, t):
            return s, 2, t * direction, rmax
        if t + h > span:
            h = span - t
        hd = h * direction
        for st in range(1, 7):
            for i in range(4):
                acc = s[i]
                for j in range(st):
                    acc += hd * A[st, j] * K[j, i]
                tmp[i] = acc
            _rhs_nb(terms, Bf, tmp, K[st])
        err = 0.0
        for i in range(4):
            snew[i] = tmp[i]
            e = 0.0
            for j in range(7):
                e += E[j] * K[j, i]
            sc = tol + tol * max(abs(s[i]), abs(snew[i]))
            err = max(err, abs(hd * e) / sc)
        steps += 1
        if err <= 1.0:
            t += h
            for i in range(4):
                s[i] = snew[i]
                K[0, i] = K[6, i]
            r = np.hypot(s[0], s[1])
            rmax = max(rmax, r)
            if r > r_esc or s[0] < -x_esc:
                return s, 1, t * direction, rmax
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
    return s, 0, t * direction, rmax


@njit
def _batch_nb(terms, Bf, S0, t_end, tol, r_esc, x_esc, max_steps):
    n = S0.shape[0]
    S = np.zeros((n, 4))
    status = np.zeros(n, dtype=np.int64)
    times = np.zeros(n)
    rmax = np.zeros(n)
    for k in range(n):
        s, st, tt, rm = _dp45_nb(terms, Bf, S0[k], t_end, tol, r_esc, x_esc, max_steps)
        S[k] = s
        status[k] = st
        times[k] = tt
        rmax[k] = rm
    return S, status, times, rmax


def _rhs_np(terms, Bf, S):
    _, vx, vy = value_grad(terms, S[:, 0], S[:, 1])
    u = S[:, 2] + Bf * S[:, 1]
    return np.stack([u, S[:, 3], -1.0 - vx, -Bf * u - vy], axis=1)


def _batch_np(terms, Bf, S0, t_end, tol, r_esc, x_esc, max_steps):
    S = np.array(S0, dtype=float)
    n = S.shape[0]
    direction = 1.0 if t_end >= 0 else -1.0
    span = abs(t_end)
    status = np.zeros(n, dtype=np.int64)
    t = np.zeros(n)
    rmax = np.hypot(S[:, 0], S[:, 1])
    if span == 0.0 or n == 0:
        return S, status, t, rmax
    h = np.full(n, min(0.05, span))
    steps = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    K0 = _rhs_np(terms, Bf, S)
    while active.any():
        idx = np.nonzero(active)[0]
        bad = (steps[idx] >= max_steps) | (h[idx] < 1e-14 * np.maximum(1.0, t[idx]))
        if bad.any():
            status[idx[bad]] = 2
            active[idx[bad]] = False
            idx = idx[~bad]
            if idx.size == 0:
                break
        hi = np.minimum(h[idx], span - t[idx])
        hd = (hi * direction)[:, None]
        s = S[idx]
        K = [K0[idx]]
        for st in range(1, 7):
            acc = s.copy()
            for j in range(st):
                if A[st, j] != 0.0:
                    acc += hd * A[st, j] * K[j]
            K.append(_rhs_np(terms, Bf, acc))
        snew = acc
        e = sum(E[j] * K[j] for j in range(7) if E[j] != 0.0)
        sc = tol + tol * np.maximum(np.abs(s), np.abs(snew))
        err = (np.abs(hd * e) / sc).max(axis=1)
        steps[idx] += 1
        ok = err <= 1.0
        acc_idx = idx[ok]
        t[acc_idx] += hi[ok]
        S[acc_idx] = snew[ok]
        K0[acc_idx] = K[6][ok]
        r = np.hypot(S[acc_idx, 0], S[acc_idx, 1])
        rmax[acc_idx] = np.maximum(rmax[acc_idx], r)
        esc = (r > r_esc) | (S[acc_idx, 0] < -x_esc)
        status[acc_idx[esc]] = 1
        active[acc_idx[esc]] = False
        done = t[acc_idx] >= span
        active[acc_idx[done & ~esc]] = False
        with np.errstate(divide="ignore"):
            grow = np.where(err == 0.0, 5.0, np.minimum(5.0, 0.9 * err ** -0.2))
            shrink = np.maximum(0.2, 0.9 * err ** -0.2)
        h[idx] = hi * np.where(ok, grow, shrink)
    return S, status, t * direction, rmax


def integrate_batch(terms, Bf, S0, t_end, tol, r_esc, x_esc, max_steps=2_000_000):
    """Integrate each row of ``S0`` (states ``x, y, xi, eta``) to ``t_end``.

    Returns ``(final states, status, stop times, max radius)``.
    """
    S0 = np.ascontiguousarray(np.atleast_2d(S0), dtype=float)
    terms = np.ascontiguousarray(terms, dtype=float)
    f = _batch_nb if USE_NUMBA else _batch_np
    return f(terms, float(Bf), S0, float(t_end), float(tol), float(r_esc),
             float(x_esc), int(max_steps))
