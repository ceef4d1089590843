"""Potential term evaluators.

A potential is a float array of rows ``(kind, A, x0, y0, width, lam1, lam2)``.
The functions below are plain arithmetic, so they run on numpy arrays
(including complex ones) as written and also compile under numba for
scalars.
"""
import numpy as np

from .._jit import njit

KIND_ZERO = 0
KIND_BUMP = 1
KIND_WELL = 2


def _term_grad(row, x, y):
    kind = row[0]
    A = row[1]
    xt = x - row[2]
    yt = y - row[3]
    w = row[4]
    inv = 1.0 / (w * w)
    if kind == KIND_BUMP:
        v = A * np.exp(-(xt * xt + yt * yt) * inv)
        return v, -2.0 * xt * inv * v, -2.0 * yt * inv * v
    if kind == KIND_WELL:
        l1 = row[5]
        l2 = row[6]
        g = np.exp(-(xt * xt + yt * yt) * inv)
        f = A + 0.5 * l1 * xt * xt + 0.5 * l2 * yt * yt - xt
        fx = l1 * xt - 1.0
        fy = l2 * yt
        gx = -2.0 * xt * inv * g
        gy = -2.0 * yt * inv * g
        return f * g, fx * g + f * gx, fy * g + f * gy
    z = 0.0 * x
    return z, z, z


def _term_hess(row, x, y):
    kind = row[0]
    A = row[1]
    xt = x - row[2]
    yt = y - row[3]
    w = row[4]
    inv = 1.0 / (w * w)
    if kind == KIND_BUMP:
        v = A * np.exp(-(xt * xt + yt * yt) * inv)
        return ((4.0 * xt * xt * inv * inv - 2.0 * inv) * v,
                4.0 * xt * yt * inv * inv * v,
                (4.0 * yt * yt * inv * inv - 2.0 * inv) * v)
    if kind == KIND_WELL:
        l1 = row[5]
        l2 = row[6]
        g = np.exp(-(xt * xt + yt * yt) * inv)
        f = A + 0.5 * l1 * xt * xt + 0.5 * l2 * yt * yt - xt
        fx = l1 * xt - 1.0
        fy = l2 * yt
        gx = -2.0 * xt * inv * g
        gy = -2.0 * yt * inv * g
        gxx = (4.0 * xt * xt * inv * inv - 2.0 * inv) * g
        gyy = (4.0 * yt * yt * inv * inv - 2.0 * inv) * g
        gxy = 4.0 * xt * yt * inv * inv * g
        return (l1 * g + 2.0 * fx * gx + f * gxx,
                fx * gy + fy * gx + f * gxy,
                l2 * g + 2.0 * fy * gy + f * gyy)
    z = 0.0 * x
    return z, z, z


def value_grad(terms, x, y):
    """(V, V_x, V_y) summed over rows of ``terms``."""
    v = 0.0 * x
    vx = 0.0 * x
    vy = 0.0 * x
    for k in range(terms.shape[0]):
        a, b, c = _term_grad(terms[k], x, y)
        v = v + a
        vx = vx + b
        vy = vy + c
    return v, vx, vy


def hessian(terms, x, y):
    hxx = 0.0 * x
    hxy = 0.0 * x
    hyy = 0.0 * x
    for k in range(terms.shape[0]):
        a, b, c = _term_hess(terms[k], x, y)
        hxx = hxx + a
        hxy = hxy + b
        hyy = hyy + c
    return hxx, hxy, hyy


_term_grad_nb = njit(_term_grad)


@njit
def value_grad_nb(terms, x, y):
    v = 0.0
    vx = 0.0
    vy = 0.0
    for k in range(terms.shape[0]):
        a, b, c = _term_grad_nb(terms[k], x, y)
        v += a
        vx += b
        vy += c
    return v, vx, vy
