"""Hit counting for phase-space Monte Carlo volumes."""
import numpy as np

from .._jit import USE_NUMBA, njit
from .fields import value_grad, value_grad_nb

REGION_DISC = 0
REGION_RECT = 1


@njit
def _count_nb(terms, Bf, a, b, region, S):
    hits = 0
    for k in range(S.shape[0]):
        x = S[k, 0]
        y = S[k, 1]
        if region[0] == REGION_DISC:
            inside = (x - region[1]) ** 2 + (y - region[2]) ** 2 <= region[3] ** 2
        else:
            inside = region[1] <= x <= region[2] and region[3] <= y <= region[4]
        if not inside:
            continue
        v, _, _ = value_grad_nb(terms, x, y)
        u = S[k, 2] + Bf * y
        p = 0.5 * u * u + 0.5 * S[k, 3] ** 2 + x + v
        if a <= p <= b:
            hits += 1
    return hits


def _count_np(terms, Bf, a, b, region, S):
    x, y = S[:, 0], S[:, 1]
    if region[0] == REGION_DISC:
        inside = (x - region[1]) ** 2 + (y - region[2]) ** 2 <= region[3] ** 2
    else:
        inside = (region[1] <= x) & (x <= region[2]) & (region[3] <= y) & (y <= region[4])
    v, _, _ = value_grad(terms, x, y)
    u = S[:, 2] + Bf * y
    p = 0.5 * u * u + 0.5 * S[:, 3] ** 2 + x + v
    return int(np.count_nonzero(inside & (a <= p) & (p <= b)))


def count_hits(terms, Bf, a, b, region, S):
    """Number of rows of ``S`` with ``a <= p <= b`` and ``(x, y)`` in region."""
    f = _count_nb if USE_NUMBA else _count_np
    return f(np.ascontiguousarray(terms, dtype=float), float(Bf), float(a),
             float(b), np.asarray(region, dtype=float),
             np.ascontiguousarray(S, dtype=float))
