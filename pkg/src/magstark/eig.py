"""Eigenvalue machinery: a dense oracle, banded shifted LU, shift-invert
Arnoldi with locking, Sylvester inertia counts, eigenvalue matching and
resolvent-norm probes."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .assembly import ComplexSparseMatrix, apply_operator
from .kernels import banded, dense


class SingularShift(ArithmeticError):
    """``A - z0 I`` is singular to working precision."""


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float
    meta: dict = field(default_factory=dict)


@dataclass
class EigResult:
    pairs: list
    converged: bool
    flags: list = field(default_factory=list)
    cycles: int = 0

    @property
    def values(self):
        return np.array([p.value for p in self.pairs], dtype=complex)


def sort_by_real(pairs):
    return sorted(pairs, key=lambda p: (p.value.real, p.value.imag))


def _as_dense(matrix):
    if isinstance(matrix, ComplexSparseMatrix):
        return matrix.to_dense()
    return np.asarray(matrix, dtype=complex)


def _matvec(matrix, v):
    if isinstance(matrix, ComplexSparseMatrix):
        return apply_operator(matrix, v)
    return np.asarray(matrix, dtype=complex) @ v


def _norm1(matrix):
    if isinstance(matrix, ComplexSparseMatrix):
        return matrix.norm1()
    return float(np.abs(np.asarray(matrix)).sum(axis=0).max())


# ---------------------------------------------------------------- dense

def small_eig(G):
    """Eigenvalues and unit eigenvectors of a small dense matrix via
    Hessenberg + Schur + triangular back-substitution."""
    n = G.shape[0]
    if n == 0:
        return np.zeros(0, complex), np.zeros((0, 0), complex)
    H, W = dense.hessenberg(G)
    T, Z = dense.schur_hessenberg(H, want_z=True)
    Y = dense.triangular_eigenvectors(T)
    X = dense.apply_q(W, Z @ Y)
    X /= np.linalg.norm(X, axis=0)
    return np.diag(T).copy(), X


def dense_eigs(matrix, cap=2000, inverse_iterations=3):
    """All eigenpairs of a dense or sparse matrix (N <= ``cap``).

    Eigenvalues come from Hessenberg reduction plus shifted QR; vectors from
    inverse iteration on the Hessenberg form.  If QR stalls, the result is
    returned with ``converged=False`` and the diagonal of the partially
    reduced matrix as eigenvalue estimates.
    """
    A = _as_dense(matrix)
    n = A.shape[0]
    if n > cap:
        raise ValueError(f"N = {n} exceeds the dense cap {cap}")
    H, W = dense.hessenberg(A)
    flags = []
    try:
        T, _ = dense.schur_hessenberg(H, want_z=False)
        ok = True
    except dense.QRNoConvergence as exc:
        T = H
        ok = False
        flags.append(str(exc))
    vals = np.diag(T).copy()
    rng = np.random.default_rng(0)
    start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    anorm = max(_norm1(A), np.finfo(float).tiny)
    XH = np.empty((n, n), dtype=complex)
    for i, lam in enumerate(vals):
        # tiny offset keeps the shifted Hessenberg solve away from exact singularity
        XH[:, i] = dense.hessenberg_inverse_iteration(H, lam + 1e-13 * anorm, start,
                                                      inverse_iterations)
    V = dense.apply_q(W, XH)
    V /= np.linalg.norm(V, axis=0)
    R = np.linalg.norm(A @ V - V * vals, axis=0)
    pairs = [EigenPair(complex(vals[i]), V[:, i], float(R[i]), {"method": "dense"})
             for i in range(n)]
    return EigResult(pairs, ok, flags)


# ---------------------------------------------------------------- banded LU

class BandedLU:
    """LU factorisation of ``A - z0 I`` in LAPACK band storage."""

    def __init__(self, matrix, z0=0.0):
        self.N = matrix.N
        self.kl = matrix.kl
        self.ku = matrix.ku
        self.z0 = complex(z0)
        ab = banded.csr_to_band(matrix.indptr, matrix.indices, matrix.data, matrix.N,
                                matrix.kl, matrix.ku)
        kv = self.kl + self.ku
        ab[kv, :] -= self.z0
        self.anorm = matrix.norm1() + abs(self.z0)
        self.piv, info = banded.lu_factor(ab, self.kl, self.ku, self.anorm)
        self.ab = ab
        if info:
            raise SingularShift(
                f"A - z0 I is singular to working precision (pivot {info - 1}, z0 = {self.z0})")

    def solve(self, b):
        return banded.lu_solve(self.ab, self.kl, self.ku, self.piv, b)

    def solve_h(self, b):
        """Solve ``(A - z0 I)^H x = b``."""
        return banded.lu_solve(self.ab, self.kl, self.ku, self.piv, b,
                               conjugate_transpose=True)


def lu_banded(matrix, z0=0.0):
    return BandedLU(matrix, z0)


# ---------------------------------------------------------------- Arnoldi

def _orthogonalize(w, basis, ncols):
    """Two passes of classical Gram-Schmidt against ``basis[:, :ncols]``."""
    coef = np.zeros(ncols, dtype=complex)
    for _ in range(2):
        if ncols == 0:
            break
        c = basis[:, :ncols].conj().T @ w
        w = w - basis[:, :ncols] @ c
        coef += c
    return w, coef


def shift_invert_arnoldi(matrix, z0, k, tol=1e-10, restarts=20, ncv=None,
                         factorization=None, seed=12345):
    """The ``k`` eigenpairs of ``matrix`` nearest ``z0``.

    Arnoldi on ``S = (A - z0 I)^{-1}`` with full reorthogonalisation.  Each
    cycle keeps the leading Ritz directions (converged ones are thereby
    locked) and continues the Krylov sequence from the last ``S``-image, so
    a restart costs no extra solves.  Ritz values map back as
    ``z0 + 1/mu``.  Every returned residual is ``||A v - lam v||`` from a
    fresh matvec; pairs above ``tol * ||A||_1`` are flagged.
    """
    N = matrix.N
    k = int(min(k, N))
    if k < 1:
        raise ValueError("k must be >= 1")
    lu = factorization if factorization is not None else BandedLU(matrix, z0)
    z0 = lu.z0
    anorm = matrix.norm1()
    shifted = lu.anorm
    # ||A x - lam x|| = ||(A - z0) r|| / |mu| with r the S-residual
    stol = 0.5 * tol * anorm / max(shifted, np.finfo(float).tiny)
    m = int(min(ncv or (2 * k + 20), N))
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)

    Ql = np.zeros((N, 0), dtype=complex)
    SQl = np.zeros((N, 0), dtype=complex)
    flags = []
    prev = None
    extra = 0
    for cycle in range(restarts + 1):
        p = Ql.shape[1]
        Wb = np.zeros((N, m), dtype=complex)
        SWb = np.zeros((N, m), dtype=complex)
        Wb[:, :p] = Ql
        SWb[:, :p] = SQl
        cols = p
        w, _ = _orthogonalize(v0, Wb, cols)
        nrm = np.linalg.norm(w)
        if nrm > 1e-12 * np.linalg.norm(v0) and cols < m:
            Wb[:, cols] = w / nrm
            cols += 1
        while cols > p:
            s = lu.solve(Wb[:, cols - 1])
            SWb[:, cols - 1] = s
            if cols == m:
                break
            w, _ = _orthogonalize(s, Wb, cols)
            nrm = np.linalg.norm(w)
            if nrm <= 1e-12 * np.linalg.norm(s):
                # invariant subspace: try a fresh direction
                w, _ = _orthogonalize(rng.standard_normal(N) + 0j, Wb, cols)
                nrm = np.linalg.norm(w)
                if nrm <= 1e-12:
                    break
            Wb[:, cols] = w / nrm
            cols += 1
        Wb = Wb[:, :cols]
        SWb = SWb[:, :cols]
        G = Wb.conj().T @ SWb
        mu, Y = small_eig(G)
        order = np.argsort(-np.abs(mu), kind="stable")
        mu = mu[order]
        Y = Y[:, order]
        X = Wb @ Y
        R = SWb @ Y - X * mu
        res = np.linalg.norm(R, axis=0) / np.maximum(np.abs(mu), np.finfo(float).tiny)
        kk = min(k, len(mu))
        vals, vecs = mu[:kk], X[:, :kk]
        lams = z0 + 1.0 / vals
        # small residuals do not pin down ill-conditioned eigenvalues, so also
        # wait until the wanted values stop moving between cycles
        settled = prev is not None and all(
            np.min(np.abs(prev - v)) <= tol * anorm for v in lams)
        prev = lams
        small = bool((res[:kk] <= stol).all()) and kk == k
        extra = extra + 1 if small else 0
        if small and (settled or extra > 2 or cols >= N):
            break
        if cycle == restarts:
            if not small:
                flags.append(f"not converged after {restarts} restarts")
            break
        # thick restart: keep the leading Ritz directions, continue from the
        # component of the last S-image outside the basis
        keep = min(max(k, (k + m) // 2), cols - 1)
        Qy, _ = np.linalg.qr(Y[:, :keep])
        Ql = Wb @ Qy
        SQl = SWb @ Qy
        v0 = SWb[:, cols - 1] - Wb @ (Wb.conj().T @ SWb[:, cols - 1])
        if np.linalg.norm(v0) <= 1e-14 * np.linalg.norm(SWb[:, cols - 1]):
            v0 = rng.standard_normal(N) + 0j
    pairs = []
    for i in range(len(vals)):
        v = vecs[:, i] / np.linalg.norm(vecs[:, i])
        lam = z0 + 1.0 / vals[i]
        r = float(np.linalg.norm(apply_operator(matrix, v) - lam * v))
        ok = r <= tol * anorm
        meta = {"shift": [z0.real, z0.imag], "cycles": cycle + 1,
                "s_residual": float(res[i]), "converged": bool(ok)}
        pairs.append(EigenPair(complex(lam), v, r, meta))
        if not ok:
            flags.append(f"pair {i} residual {r:.3e} above tol*||A||_1")
    pairs.sort(key=lambda p: (abs(p.value - z0), p.value.real))
    return EigResult(pairs, not flags, flags, cycle + 1)


# ---------------------------------------------------------------- inertia

def count_below(matrix, sigma, _retries=3):
    """Number of eigenvalues of a Hermitian banded matrix below ``sigma``
    (Sylvester inertia of the LDL^H factorisation of ``A - sigma I``)."""
    if matrix.symmetry != "hermitian":
        raise ValueError("inertia counting needs a Hermitian matrix")
    bw = matrix.bandwidth
    anorm = matrix.norm1()
    s = float(sigma)
    for attempt in range(_retries + 1):
        lb = banded.csr_to_lower_band(matrix.indptr, matrix.indices, matrix.data,
                                      matrix.N, bw)
        lb[0, :] -= s
        d, info = banded.ldlh_diagonal(lb, anorm)
        if not info:
            return int(np.count_nonzero(d < 0))
        # sigma (nearly) hits an eigenvalue; nudge it
        s += 1e-9 * max(anorm, 1.0) * (attempt + 1)
    raise SingularShift(f"LDL^H breakdown near sigma = {sigma}")


def count_in_interval(matrix, a, b):
    """Eigenvalues in ``[a, b)``."""
    if b <= a:
        return 0
    return count_below(matrix, b) - count_below(matrix, a)


# ---------------------------------------------------------------- matching

@dataclass
class Matching:
    pairs: list          # (i, j, distance) into the two input lists
    unmatched_a: list
    unmatched_b: list

    @property
    def max_distance(self):
        return max((d for _, _, d in self.pairs), default=0.0)


def match_eigenvalues(a, b, max_distance=np.inf, assignment_cap=50):
    """Pair two eigenvalue lists.

    Greedy nearest neighbour (``a`` taken by ascending real part); when two
    entries of ``a`` want the same partner, fall back to an optimal
    assignment if both lists have at most ``assignment_cap`` items, else to
    a global greedy by distance.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0 or len(b) == 0:
        return Matching([], list(range(len(a))), list(range(len(b))))
    D = np.abs(a[:, None] - b[None, :])
    order = np.lexsort((a.imag, a.real))
    near = {int(i): int(np.lexsort((b.real, D[i]))[0]) for i in order}
    chosen = list(near.values())
    if len(set(chosen)) == len(chosen):
        pairs = [(i, near[i], float(D[i, near[i]])) for i in order]
    elif len(a) <= assignment_cap and len(b) <= assignment_cap:
        from scipy.optimize import linear_sum_assignment
        r, c = linear_sum_assignment(D)
        pairs = sorted(((int(i), int(j), float(D[i, j])) for i, j in zip(r, c)),
                       key=lambda t: (a[t[0]].real, a[t[0]].imag))
    else:
        flat = sorted(((D[i, j], a[i].real, i, j) for i in range(len(a))
                       for j in range(len(b))))
        ua, ub, pairs = set(), set(), []
        for d, _, i, j in flat:
            if i not in ua and j not in ub:
                ua.add(i)
                ub.add(j)
                pairs.append((int(i), int(j), float(d)))
        pairs.sort(key=lambda t: (a[t[0]].real, a[t[0]].imag))
    pairs = [p for p in pairs if p[2] <= max_distance]
    ma = {p[0] for p in pairs}
    mb = {p[1] for p in pairs}
    return Matching(pairs, [i for i in range(len(a)) if i not in ma],
                    [j for j in range(len(b)) if j not in mb])


# ---------------------------------------------------------------- resolvent

def resolvent_norm(matrix, z, iterations=30, seed=7, lu=None):
    """Estimate ``||(A - z)^{-1}||_2`` by Lanczos on
    ``(A - z)^{-1} (A - z)^{-H}`` using one banded factorisation.

    The largest Ritz value never exceeds the true norm squared, so the
    estimate is a lower bound that increases with ``iterations``.
    """
    lu = lu if lu is not None else BandedLU(matrix, z)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(matrix.N) + 1j * rng.standard_normal(matrix.N)
    x /= np.linalg.norm(x)
    V = [x]
    alpha, beta = [], []
    est = 0.0
    for k in range(min(iterations, matrix.N)):
        w = lu.solve(lu.solve_h(V[-1]))
        alpha.append(float(np.vdot(V[-1], w).real))
        # full reorthogonalisation; the basis stays small
        for _ in range(2):
            for v in V:
                w -= np.vdot(v, w) * v
        prev = est
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        est = float(np.linalg.eigvalsh(T)[-1])
        if abs(est - prev) <= 1e-6 * est:
            break
        b = float(np.linalg.norm(w))
        if b <= 1e-14 * max(est, 1e-300):
            break
        beta.append(b)
        V.append(w / b)
    return float(np.sqrt(max(est, 0.0)))


# ---------------------------------------------------------------- dumps

def write_pairs_csv(path, pairs):
    with open(path, "w") as f:
        f.write("re,im,residual,flags\n")
        for p in pairs:
            fl = "" if p.meta.get("converged", True) else "unconverged"
            f.write(f"{p.value.real:.17g},{p.value.imag:.17g},{p.residual:.6e},{fl}\n")


VECTOR_MAGIC = b"MSVEC001"


def write_vector(path, v):
    """Little-endian binary: 8-byte magic, uint64 N, then interleaved re/im."""
    v = np.asarray(v, dtype="<c16")
    with open(path, "wb") as f:
        f.write(VECTOR_MAGIC + struct.pack("<Q", v.size))
        f.write(v.tobytes())


def read_vector(path):
    with open(path, "rb") as f:
        head = f.read(16)
        if head[:8] != VECTOR_MAGIC:
            raise ValueError("not a vector dump")
        (n,) = struct.unpack("<Q", head[8:])
        return np.frombuffer(f.read(16 * n), dtype="<c16").copy()
