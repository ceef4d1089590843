"""Finite-difference assembly of P, P^int, Q_theta and Q^ext_theta."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distortion import DistortedCoefficients, undistorted_coefficients
from .kernels.banded import csr_bandwidths
from .kernels.sparse import csr_matvec

HERMITIAN = "hermitian"
COMPLEX_SYMMETRIC = "complex_symmetric"
NONE = "none"


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    n_x: int
    n_y: int

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_x + 1)

    @property
    def dy(self):
        return (self.y_max - self.y_min) / (self.n_y + 1)

    @property
    def N(self):
        return self.n_x * self.n_y

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(1, self.n_x + 1)

    @property
    def y(self):
        return self.y_min + self.dy * np.arange(1, self.n_y + 1)

    @property
    def X(self):
        return np.meshgrid(self.x, self.y, indexing="ij")[0]

    @property
    def Y(self):
        return np.meshgrid(self.x, self.y, indexing="ij")[1]

    def index(self, i, j):
        return i + self.n_x * j

    def unindex(self, k):
        return k % self.n_x, k // self.n_x

    def to_dict(self):
        return {"x": [self.x_min, self.x_max], "y": [self.y_min, self.y_max],
                "n_x": self.n_x, "n_y": self.n_y, "dx": self.dx, "dy": self.dy}


def make_grid(domain, n_x, n_y):
    x_min, x_max, y_min, y_max = map(float, domain)
    if not (x_max > x_min and y_max > y_min):
        raise AssemblyError("degenerate domain")
    if n_x < 3 or n_y < 3:
        raise AssemblyError("need at least 3 interior points per direction")
    return Grid2D(x_min, x_max, y_min, y_max, int(n_x), int(n_y))


def grid_for_spacing(domain, dx, dy):
    """Grid whose spacings do not exceed ``dx``, ``dy``."""
    x_min, x_max, y_min, y_max = domain
    n_x = max(3, int(np.ceil((x_max - x_min) / dx)) - 1)
    n_y = max(3, int(np.ceil((y_max - y_min) / dy)) - 1)
    return make_grid(domain, n_x, n_y)


@dataclass
class ComplexSparseMatrix:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    N: int
    kl: int
    ku: int
    symmetry: str
    meta: dict = field(default_factory=dict)

    @property
    def bandwidth(self):
        return max(self.kl, self.ku)

    @property
    def nnz(self):
        return len(self.data)

    def norm1(self):
        col = np.zeros(self.N)
        np.add.at(col, self.indices, np.abs(self.data))
        return float(col.max()) if self.N else 0.0

    def diagonal(self):
        rows = np.repeat(np.arange(self.N), np.diff(self.indptr))
        d = np.zeros(self.N, dtype=complex)
        on = rows == self.indices
        d[rows[on]] = self.data[on]
        return d

    def to_dense(self):
        A = np.zeros((self.N, self.N), dtype=complex)
        rows = np.repeat(np.arange(self.N), np.diff(self.indptr))
        A[rows, self.indices] = self.data
        return A

    def row_nnz(self):
        return np.diff(self.indptr)

    def dump_coo(self, path):
        """Plain-text ``row col re im`` lines (0-based)."""
        rows = np.repeat(np.arange(self.N), np.diff(self.indptr))
        with open(path, "w") as f:
            f.write(f"# N={self.N} nnz={self.nnz}\n")
            for r, c, v in zip(rows, self.indices, self.data):
                f.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")


def from_coo(rows, cols, vals, N, symmetry=NONE, meta=None):
    """Build CSR from (row, col, value) triples; duplicates are rejected."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows) > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
        raise AssemblyError("duplicate entries")
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    kl, ku = csr_bandwidths(indptr, cols)
    return ComplexSparseMatrix(indptr, cols, vals, int(N), kl, ku, symmetry, dict(meta or {}))


def _cplx(re, im):
    out = np.empty(np.broadcast(re, im).shape, dtype=complex)
    out.real = re
    out.imag = im
    return out


def _stencil(grid, params, c):
    """Entries of the distorted operator for coefficient fields ``c``.

    x-part:  -h^2/2 m d_x(m d_x u) + B y h m (-i) d_x u + (B y)^2 / 2
    y-part:  -h^2/2 (d_y - g d_x)^2 u   (corner terms only where g != 0)

    d_y(g d_x u) + g d_x d_y u is differenced on the four corner points, so
    rows with shear have a 9-point stencil; elsewhere it is 5-point.
    """
    nx, ny = grid.n_x, grid.n_y
    h = params.h
    dx, dy = grid.dx, grid.dy
    cx = 0.5 * h * h / (dx * dx)
    cy = 0.5 * h * h / (dy * dy)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    k = I + nx * J
    m = c.m
    mp = c.m_half[1:, :]
    mm = c.m_half[:-1, :]
    g = c.g
    gp = c.g_half[1:, :]
    gm = c.g_half[:-1, :]
    shear = g != 0
    By = c.By
    a = By * h / (2.0 * dx)

    R, C, V = [], [], []

    def add(mask, di, dj, val):
        ii = I[mask] + di
        jj = J[mask] + dj
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        R.append(k[mask][ok])
        C.append((ii + nx * jj)[ok])
        V.append(np.asarray(val)[mask][ok] if np.ndim(val) else np.full(ok.sum(), val))

    every = np.ones((nx, ny), dtype=bool)
    diag = cx * m * (mp + mm) + 2.0 * cy + 0.5 * By * By + c.W
    diag = np.where(shear, diag + cx * g * (gp + gm), diag)
    add(every, 0, 0, diag)
    # x neighbours: kinetic plus magnetic cross term (-i a m at +1, +i a m at -1)
    east = -cx * m * mp + _cplx(0.0, -1.0) * (a * m)
    west = -cx * m * mm + _cplx(0.0, 1.0) * (a * m)
    east = np.where(shear, east - cx * g * gp, east)
    west = np.where(shear, west - cx * g * gm, west)
    add(every, 1, 0, east)
    add(every, -1, 0, west)
    add(every, 0, 1, np.full((nx, ny), -cy))
    add(every, 0, -1, np.full((nx, ny), -cy))
    if shear.any():
        q = 0.5 * h * h / (4.0 * dx * dy)
        gn = np.zeros_like(g)
        gs = np.zeros_like(g)
        gn[:, :-1] = g[:, 1:]
        gs[:, 1:] = g[:, :-1]
        add(shear, 1, 1, q * (gn + g))
        add(shear, -1, 1, -q * (gn + g))
        add(shear, 1, -1, -q * (gs + g))
        add(shear, -1, -1, q * (gs + g))
    return np.concatenate(R), np.concatenate(C), np.concatenate(V)


class _Tabulated:
    def __init__(self, U):
        self.U = U

    def total(self, X, Y):
        return self.U


SELF_ADJOINT = ("P", "P_int")
DISTORTED = ("Q", "Q_ext")


def assemble_operator(kind, grid, params, source):
    """Assemble one of ``P``, ``P_int`` (self-adjoint; ``source`` is a real
    total potential with ``total(x, y)``) or ``Q``, ``Q_ext`` (distorted;
    ``source`` is DistortedCoefficients tabulated on ``grid``)."""
    meta = {"kind": kind, "h": params.h, "B": params.B, "grid": grid.to_dict()}
    if kind in SELF_ADJOINT:
        U = np.asarray(source.total(grid.X, grid.Y))
        if np.iscomplexobj(U):
            if np.any(U.imag != 0):
                raise AssemblyError("self-adjoint assembly needs a real potential")
            U = U.real
        c = undistorted_coefficients(_Tabulated(U), grid.x, grid.y, params.B)
        r, col, v = _stencil(grid, params, c)
        return from_coo(r, col, v, grid.N, HERMITIAN, meta)
    if kind in DISTORTED:
        if not isinstance(source, DistortedCoefficients):
            raise AssemblyError("distorted kinds need DistortedCoefficients")
        if source.shape != (grid.n_x, grid.n_y) or not (
                np.array_equal(source.x, grid.x) and np.array_equal(source.y, grid.y)):
            raise AssemblyError("coefficient grid mismatch")
        r, col, v = _stencil(grid, params, source)
        meta["theta"] = [source.theta.real, source.theta.imag]
        sym = COMPLEX_SYMMETRIC if params.B == 0 and source.theta.real == 0 else NONE
        if source.theta == 0:
            sym = HERMITIAN if not np.any(source.W.imag) else NONE
        return from_coo(r, col, v, grid.N, sym, meta)
    raise AssemblyError(f"unknown operator kind {kind!r}")


def apply_operator(matrix, vector):
    v = np.asarray(vector)
    if v.shape != (matrix.N,):
        raise AssemblyError(f"dimension mismatch: {v.shape} vs N={matrix.N}")
    return csr_matvec(matrix.indptr, matrix.indices, matrix.data, v)
