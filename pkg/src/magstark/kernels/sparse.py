"""CSR matrix-vector product with a fixed summation order."""
import numpy as np

from .._jit import USE_NUMBA, njit


@njit
def _matvec_nb(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n, dtype=np.complex128)
    for r in range(n):
        acc = 0j
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * x[indices[p]]
        y[r] = acc
    return y


def _matvec_np(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    prod = data * x[indices]
    y = np.zeros(n, dtype=np.complex128)
    # cumulative sums would reorder the additions; add row by row instead
    for k in range(int(np.diff(indptr).max(initial=0))):
        pos = indptr[:-1] + k
        has = pos < indptr[1:]
        y[has] += prod[pos[has]]
    return y


def csr_matvec(indptr, indices, data, x):
    x = np.ascontiguousarray(x, dtype=np.complex128)
    f = _matvec_nb if USE_NUMBA else _matvec_np
    return f(indptr, indices, data, x)
