import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstark.assembly import (AssemblyError, apply_operator, assemble_operator, from_coo,
                               make_grid)
from magstark.distortion import DistortionParams, distorted_coefficients
from magstark.eig import read_vector, write_vector
from magstark.potential import EnvelopedQuadraticWell, HamiltonianParams, PotentialSpec
from magstark.regions import Disc
from magstark.wellops import flatten_exterior

ZERO = PotentialSpec(())
WELL = PotentialSpec((EnvelopedQuadraticWell(L=3.0),))


def test_grid_examples():
    g = make_grid((0, 1, 0, 1), 3, 3)
    assert (g.dx, g.dy, g.N) == (0.25, 0.25, 9)
    g = make_grid((0, 2, 0, 1), 7, 3)
    assert (g.dx, g.dy) == (0.25, 0.25)
    for i in range(7):
        for j in range(3):
            assert g.unindex(g.index(i, j)) == (i, j)
    with pytest.raises(AssemblyError):
        make_grid((0, 1, 0, 1), 2, 3)


def test_unit_square_stencil():
    g = make_grid((0, 1, 0, 1), 3, 3)
    A = assemble_operator("P", g, HamiltonianParams(1.0, 0.0), ZERO).to_dense()
    # 1/2 (2/dx^2 + 2/dy^2) = 32 with dx = dy = 1/4
    assert np.allclose(np.diag(A).real, 32.0 + g.X.ravel(order="F"))
    assert A[g.index(0, 0), g.index(1, 0)] == -8.0
    assert A[g.index(0, 0), g.index(0, 1)] == -8.0
    assert A[g.index(0, 0), g.index(1, 1)] == 0.0


def test_magnetic_term_against_dense_construction():
    g = make_grid((-1, 1, -1, 1), 5, 4)
    h, B = 0.3, 1.7
    A = assemble_operator("P", g, HamiltonianParams(h, B), WELL).to_dense()
    # independent Kronecker build: (h D_x + B y)^2/2 + (h D_y)^2/2 + U
    def lap(n, d):
        return (np.diag(np.full(n, 2.0)) - np.eye(n, k=1) - np.eye(n, k=-1)) / d ** 2
    def cen(n, d):
        return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * d)
    Ix, Iy = np.eye(g.n_x), np.eye(g.n_y)
    # index i + n_x j: x is the fast index
    Lx = np.kron(Iy, lap(g.n_x, g.dx))
    Ly = np.kron(lap(g.n_y, g.dy), Ix)
    Dx = np.kron(Iy, cen(g.n_x, g.dx))
    Yv = np.kron(g.y, np.ones(g.n_x))
    Xv = np.kron(np.ones(g.n_y), g.x)
    U = WELL.total(Xv, Yv)
    ref = (0.5 * h * h * (Lx + Ly) - 1j * h * B * np.diag(Yv) @ Dx
           + np.diag(0.5 * (B * Yv) ** 2 + U))
    assert np.allclose(A, ref, atol=1e-13)


def test_interior_operator_is_exactly_hermitian():
    src = flatten_exterior(WELL, Disc(0, 0, 1.0), level=0.5, ramp=0.4)
    g = make_grid((-2, 2, -2, 2), 9, 8)
    P = assemble_operator("P_int", g, HamiltonianParams(0.2, 1.0), src)
    A = P.to_dense()
    assert np.array_equal(A, A.conj().T)
    assert P.symmetry == "hermitian"


def test_zero_theta_is_bitwise_P():
    g = make_grid((-3, 3, -3, 3), 12, 11)
    hp = HamiltonianParams(0.2, 1.0)
    P = assemble_operator("P", g, hp, WELL)
    c = distorted_coefficients(DistortionParams(0.5, 0.75, 0j), WELL, g.x, g.y, 1.0)
    Q = assemble_operator("Q", g, hp, c)
    assert np.array_equal(P.to_dense(), Q.to_dense())


def test_shear_rows_have_nine_points():
    g = make_grid((-4, 4, -4, 4), 20, 20)
    hp = HamiltonianParams(0.2, 1.0)
    c = distorted_coefficients(DistortionParams(0.5, 0.75, -0.2j), WELL, g.x, g.y, 1.0)
    Q = assemble_operator("Q", g, hp, c)
    nnz = Q.row_nnz().reshape(g.n_y, g.n_x)
    assert nnz.max() == 9 and nnz.min() >= 3
    P = assemble_operator("P", g, hp, WELL)
    assert P.row_nnz().max() == 5
    # plateau rows coincide with P
    A, Pd = Q.to_dense(), P.to_dense()
    core = (np.abs(g.X) < 1.0) & (np.abs(g.Y) < 1.0)
    rows = np.flatnonzero(core.ravel(order="F"))
    assert np.array_equal(A[rows], Pd[rows])


def test_coefficient_grid_mismatch():
    g = make_grid((-3, 3, -3, 3), 8, 8)
    c = distorted_coefficients(DistortionParams(0.5, 0.75, -0.1j), WELL, g.x[:-1], g.y, 1.0)
    with pytest.raises(AssemblyError):
        assemble_operator("Q", g, HamiltonianParams(0.2, 1.0), c)
    with pytest.raises(AssemblyError):
        assemble_operator("Q", g, HamiltonianParams(0.2, 1.0), WELL)
    with pytest.raises(AssemblyError):
        assemble_operator("R", g, HamiltonianParams(0.2, 1.0), WELL)


def test_matvec_examples(tmp_path):
    g = make_grid((-2, 2, -2, 2), 6, 5)
    c = distorted_coefficients(DistortionParams(0.3, 0.5, -0.2j), WELL, g.x, g.y, 1.0)
    Q = assemble_operator("Q", g, HamiltonianParams(0.3, 1.0), c)
    A = Q.to_dense()
    for k in (0, 7, Q.N - 1):
        e = np.zeros(Q.N, complex)
        e[k] = 1
        assert np.array_equal(apply_operator(Q, e), A[:, k])
    x = np.random.default_rng(1).standard_normal(Q.N) + 0j
    assert np.allclose(apply_operator(Q, x), A @ x, rtol=1e-14, atol=1e-14)
    I = from_coo(np.arange(5), np.arange(5), np.ones(5), 5)
    v = np.arange(5) + 1j
    assert np.array_equal(apply_operator(I, v), v)
    with pytest.raises(AssemblyError):
        apply_operator(Q, np.ones(Q.N + 1))
    write_vector(tmp_path / "v.bin", x)
    assert np.array_equal(read_vector(tmp_path / "v.bin"), x)
    assert (tmp_path / "v.bin").stat().st_size == 16 + 16 * Q.N


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 3.0), st.integers(3, 8), st.integers(3, 8))
def test_self_adjoint_assembly_property(h, B, nx, ny):
    g = make_grid((-2, 2, -1.5, 1.5), nx, ny)
    A = assemble_operator("P", g, HamiltonianParams(h, B), WELL).to_dense()
    assert np.array_equal(A, A.conj().T)
