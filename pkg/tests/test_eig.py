import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstark.assembly import assemble_operator, from_coo, make_grid
from magstark.distortion import DistortionParams, distorted_coefficients
from magstark.eig import (BandedLU, SingularShift, count_below, count_in_interval,
                          dense_eigs, match_eigenvalues, resolvent_norm,
                          shift_invert_arnoldi, small_eig, write_pairs_csv)
from magstark.potential import EnvelopedQuadraticWell, HamiltonianParams, PotentialSpec
from magstark.regions import Disc
from magstark.wellops import flatten_exterior, harmonic_frequencies


def sparse_of(A):
    r, c = np.nonzero(A)
    return from_coo(r, c, A[r, c], A.shape[0])


def test_dense_examples():
    assert np.sort(dense_eigs(np.diag([2.0, 3.0])).values.real).tolist() == [2.0, 3.0]
    v = dense_eigs(np.array([[0.0, 1.0], [-1.0, 0.0]])).values
    assert np.allclose(np.sort_complex(v), [-1j, 1j], atol=1e-14)


def test_dense_trace_and_residuals():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    r = dense_eigs(A)
    assert r.converged
    assert abs(r.values.sum() - np.trace(A)) < 1e-10
    assert max(p.residual for p in r.pairs) < 1e-12 * np.abs(A).sum(0).max()


def test_dense_known_spectrum_under_similarity():
    rng = np.random.default_rng(1)
    lam = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    S = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    A = S @ np.diag(lam) @ np.linalg.inv(S)
    got = dense_eigs(A).values
    m = match_eigenvalues(lam, got)
    assert not m.unmatched_a and m.max_distance < 1e-9


def test_small_eig_vectors():
    rng = np.random.default_rng(2)
    G = rng.standard_normal((12, 12)) + 0j
    w, X = small_eig(G)
    assert np.allclose(G @ X, X * w, atol=1e-12)


def test_banded_lu_examples():
    I = sparse_of(np.eye(6, dtype=complex))
    lu = BandedLU(I, 0.0)
    b = np.arange(6) + 2j
    assert np.allclose(lu.solve(b), b)
    T = 2 * np.eye(10) - np.eye(10, k=1) - np.eye(10, k=-1)
    lu = BandedLU(sparse_of(T.astype(complex)), 0.0)
    b = np.random.default_rng(3).standard_normal(10) + 0j
    assert np.allclose(lu.solve(b), np.linalg.solve(T, b), atol=1e-12)
    assert np.allclose(lu.solve_h(b), np.linalg.solve(T.T, b), atol=1e-12)
    ev = np.sort(np.linalg.eigvalsh(T))[0]
    with pytest.raises(SingularShift):
        BandedLU(sparse_of(np.diag([1.0, 2.0, 3.0]).astype(complex)), 2.0)
    # a shift on a computed eigenvalue of T is singular to working precision
    with pytest.raises(SingularShift):
        BandedLU(sparse_of(T.astype(complex)), dense_eigs(T).values[np.argmin(
            np.abs(dense_eigs(T).values - ev))].real)


def test_arnoldi_diagonal():
    r = shift_invert_arnoldi(sparse_of(np.diag([1.0, 2.0, 10.0]).astype(complex)), 1.4, 2)
    assert np.allclose(np.sort(r.values.real), [1.0, 2.0])


def _interior(h=0.25):
    spec = PotentialSpec((EnvelopedQuadraticWell(L=3.0),))
    src = flatten_exterior(spec, Disc(0, 0, 1.05), level=0.35, ramp=0.45)
    g = make_grid((-2.5, 2.5, -2.5, 2.5), 17, 16)
    return assemble_operator("P_int", g, HamiltonianParams(h, 1.0), src), spec, g


def test_arnoldi_on_interior_operator():
    P, _, _ = _interior()
    z0 = 0.01
    r = shift_invert_arnoldi(P, z0, 5, tol=1e-12)
    dv = dense_eigs(P).values
    ref = dv[np.argsort(np.abs(dv - z0))[:5]]
    m = match_eigenvalues(r.values, ref)
    assert m.max_distance < 1e-10 and not m.unmatched_a


def test_arnoldi_on_distorted_operator():
    spec = PotentialSpec((EnvelopedQuadraticWell(L=3.0),))
    g = make_grid((-3, 3, -3, 3), 16, 15)
    hp = HamiltonianParams(0.25, 1.0)
    c = distorted_coefficients(DistortionParams(0.5, 0.75, -0.2j), spec, g.x, g.y, 1.0)
    Q = assemble_operator("Q", g, hp, c)
    a1, a2 = harmonic_frequencies(1.0, 1.0, 1.0)
    z0 = 0.5 * (a1 + a2) * hp.h
    r = shift_invert_arnoldi(Q, z0, 3, tol=1e-12)
    dv = dense_eigs(Q).values
    ref = dv[np.argsort(np.abs(dv - z0))[:3]]
    assert match_eigenvalues(r.values, ref).max_distance < 1e-10 * Q.norm1()
    assert all(p.residual <= 1e-12 * Q.norm1() for p in r.pairs)


def test_inertia_counts_against_dense():
    P, _, _ = _interior()
    ev = np.linalg.eigvalsh(P.to_dense())
    for s in (-0.1, 0.05, 0.2, 0.33):
        assert count_below(P, s) == np.count_nonzero(ev < s)
    assert count_in_interval(P, 0.05, 0.2) == np.count_nonzero((ev >= 0.05) & (ev < 0.2))
    assert count_in_interval(P, 0.2, 0.05) == 0


def test_inertia_needs_hermitian():
    with pytest.raises(ValueError):
        count_below(sparse_of(np.array([[1, 2], [0, 1]], complex)), 0.0)


def test_matching():
    m = match_eigenvalues([0.0, 1.0, 2.0], [1.05, -0.02, 5.0], max_distance=0.1)
    assert sorted((i, j) for i, j, _ in m.pairs) == [(0, 1), (1, 0)]
    assert m.unmatched_a == [2] and m.unmatched_b == [2]
    # both want the same partner: optimal assignment resolves it
    m = match_eigenvalues([0.0, 0.1], [0.06, 0.5])
    assert sorted((i, j) for i, j, _ in m.pairs) == [(0, 0), (1, 1)]


def test_resolvent_norm_normal_matrix():
    d = np.array([1.0, 2.0, 3.0 - 0.5j, 5.0])
    A = sparse_of(np.diag(d).astype(complex))
    z = 2.2 - 0.1j
    assert resolvent_norm(A, z, iterations=50) == pytest.approx(1 / np.min(np.abs(d - z)),
                                                                rel=1e-6)



def test_resolvent_norm_nonnormal_band():
    rng = np.random.default_rng(3)
    n = 80
    A = np.zeros((n, n), complex)
    for k in (-2, -1, 0, 1, 3):
        A += np.diag(rng.standard_normal(n - abs(k)) + 1j * rng.standard_normal(n - abs(k)), k)
    z = 0.3 + 0.2j
    exact = np.linalg.svd(np.linalg.inv(A - z * np.eye(n)), compute_uv=False)[0]
    est = resolvent_norm(sparse_of(A), z, iterations=80)
    assert est <= exact * (1 + 1e-10)
    assert est == pytest.approx(exact, rel=1e-5)

def test_pairs_csv(tmp_path):
    r = dense_eigs(np.diag([1.0, 2.0]))
    write_pairs_csv(tmp_path / "p.csv", r.pairs)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "re,im,residual,flags" and len(lines) == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2 ** 31 - 1))
def test_dense_trace_property(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    v = dense_eigs(A).values
    assert abs(v.sum() - np.trace(A)) <= 1e-11 * n * np.abs(A).max()
