"""The eight acceptance criteria at their stated tolerances.

Run ``pytest tests/test_acceptance.py`` (or this file directly); the
terminal summary lists one PASS/FAIL line per criterion.  The heavy
criteria take minutes each.
"""
import math
import time

import numpy as np
import pytest

from magstark.assembly import assemble_operator, from_coo, make_grid
from magstark.distortion import DistortionParams, distorted_coefficients
from magstark.eig import dense_eigs, shift_invert_arnoldi
from magstark.harness.config import load_config
from magstark.harness.experiments import (run_bottom_spectrum, run_correspondence, run_gap,
                                          run_nontrapping, run_real_theta, run_stability,
                                          run_volume, run_weyl, window_spectra)
from magstark.potential import (EnvelopedQuadraticWell, GaussianBump, HamiltonianParams,
                                PotentialSpec)
from magstark.regions import Disc, Rect
from magstark.wellops import (fill_well, flatten_exterior, harmonic_frequencies,
                              weyl_count_prediction)

pytestmark = [pytest.mark.acceptance]


def failed(rep):
    return [f"{v.name}: {v.detail}" for v in rep.verdicts if not v.passed]


@pytest.mark.criterion(1, "alpha formula reproduction")
def test_criterion_1_alpha_formula():
    rng = np.random.default_rng(20240611)
    B = rng.uniform(0.0, 10.0, 1000)
    L1 = 10.0 ** rng.uniform(-3, 2, 1000)
    L2 = 10.0 ** rng.uniform(-3, 2, 1000)
    t0 = time.perf_counter()
    out = [harmonic_frequencies(b, l1, l2) for b, l1, l2 in zip(B, L1, L2)]
    elapsed = time.perf_counter() - t0
    a1 = np.array([o[0] for o in out])
    a2 = np.array([o[1] for o in out])
    assert np.max(np.abs(a1 * a2 / np.sqrt(L1 * L2) - 1)) <= 1e-12
    assert np.max(np.abs((a1 ** 2 + a2 ** 2) / (B ** 2 + L1 + L2) - 1)) <= 1e-12
    for l1, l2 in zip(L1[:100], L2[:100]):
        b1, b2 = harmonic_frequencies(0.0, l1, l2)
        r1, r2 = sorted((math.sqrt(l1), math.sqrt(l2)))
        assert abs(b1 - r1) <= 1e-14 * r1 and abs(b2 - r2) <= 1e-14 * r2
    assert elapsed < 1.0


@pytest.mark.criterion(2, "harmonic bottom spectrum")
def test_criterion_2_bottom_spectrum(scenario_path):
    cfg = load_config(scenario_path("quadratic_bottom"))
    assert cfg.h_list == (0.2, 0.1, 0.05) and cfg.experiment.n_levels == 6
    a1, a2 = harmonic_frequencies(cfg.B, 1.0, 1.0)
    assert (round(a1, 4), round(a2, 4)) == (0.618, 1.618)
    rep = run_bottom_spectrum(cfg)
    assert not failed(rep), failed(rep)
    rows = rep.tables["levels"]
    for h in cfg.h_list:
        assert sum(r["h"] == h for r in rows) == 6
    C = max(abs(r["mu_int"] - r["predicted"]) / r["h"] ** 2 for r in rows)
    print(f"fitted C = {C:.4f}")
    assert C <= 5.0
    assert all(rec["disc_est"] < rec["h"] ** 2 for rec in rep.records)


@pytest.fixture(scope="module")
def barrier(scenario_path):
    cfg = load_config(scenario_path("barrier"))
    return cfg, window_spectra(cfg)


@pytest.mark.criterion(3, "resonance / reference correspondence")
def test_criterion_3_correspondence(barrier):
    cfg, spectra = barrier
    rep = run_correspondence(cfg, spectra=spectra)
    for rec in rep.records:
        print(f"h={rec['h']}: max distance {rec['max_distance']:.3e}, "
              f"estimate {rec['disc_est']:.3e}, pairs {rec['n_pairs']}")
    assert not failed(rep), failed(rep)
    d = [rec["max_distance"] for rec in rep.records]
    assert all(b < a for a, b in zip(d, d[1:]))
    fin = rep.records[-1]
    assert fin["h"] == 0.05 and fin["max_distance"] <= 10 * fin["disc_est"]
    assert all(rec["n_pairs"] > 0 for rec in rep.records)


@pytest.mark.criterion(4, "Weyl count trend and Monte Carlo volume")
def test_criterion_4_weyl(scenario_path):
    cfg = load_config(scenario_path("weyl"))
    # the pure quadratic case: Vol = 2 pi^2 b^2 / sqrt(l1 l2), prediction 50 at h = 0.1
    assert weyl_count_prediction(2 * math.pi ** 2, 0.1) == pytest.approx(50.0, rel=1e-14)
    rep = run_weyl(cfg)
    rels = [r["rel_err"] for r in rep.tables["counts"]]
    print("counts", [r["count"] for r in rep.tables["counts"]], "relative errors", rels)
    assert not failed(rep), failed(rep)
    assert all(b < a for a, b in zip(rels, rels[1:]))
    assert rels[-1] <= 0.15
    vol = run_volume(cfg)
    assert not failed(vol), failed(vol)
    mc = [r for r in vol.records if r["method"] == "monte_carlo"][0]
    cf = [r for r in vol.records if r["method"] == "closed_form"][0]
    assert mc["n_samples"] == 10 ** 6
    assert abs(mc["value"] - cf["value"]) <= 3 * mc["stderr"]


@pytest.mark.criterion(5, "gap property")
def test_criterion_5_gap(barrier):
    cfg, spectra = barrier
    rep = run_gap(cfg, spectra=spectra)
    for rec in rep.records:
        print(f"h={rec['h']}: max|Im z| {rec['max_abs_im']:.3e}, eps {rec['eps_cfg']:.3e}, "
              f"gamma {rec['gamma_cfg']:.3e}, band {rec['band_count']}")
    assert not failed(rep), failed(rep)
    fin = rep.records[-1]
    assert fin["h"] == 0.05 and fin["band_count"] == 0
    assert fin["max_abs_im"] < fin["eps_cfg"] < fin["gamma_cfg"]
    mi = [rec["max_abs_im"] for rec in rep.records]
    assert all(b < a for a, b in zip(mi, mi[1:]))


@pytest.mark.criterion(6, "non-trapping window")
@pytest.mark.parametrize("name", ["nowell", "filled_well"])
def test_criterion_6_nontrapping(scenario_path, name):
    cfg = load_config(scenario_path(name))
    rep = run_nontrapping(cfg)
    for n in rep.notes:
        print(n)
    assert not failed(rep), failed(rep)
    names = {v.name for v in rep.verdicts}
    assert {f"empty_rectangle_h{h:g}" for h in cfg.h_list} <= names
    assert "resolvent_bound" in names


@pytest.mark.criterion(7, "real-theta invariance and distortion stability")
def test_criterion_7a_real_theta(scenario_path):
    rep = run_real_theta(load_config(scenario_path("realtheta")))
    assert not failed(rep), failed(rep)


@pytest.mark.criterion(7, "real-theta invariance and distortion stability")
def test_criterion_7b_stability(scenario_path):
    rep = run_stability(load_config(scenario_path("stability")))
    assert not failed(rep), failed(rep)


def _random_matrix(rng, i):
    """Complex Ginibre (even i) or Gaussian band with a symmetric pattern."""
    n = int(rng.integers(10, 151))
    if i % 2 == 0:
        return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
    bw = int(rng.integers(1, min(12, n)))
    A = np.zeros((n, n), complex)
    for d in range(-bw, bw + 1):
        k = np.arange(max(0, -d), min(n, n - d))
        A[k, k + d] = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    return A


def _eig_condition(A):
    w, VR = np.linalg.eig(A)
    VL = np.linalg.inv(VR).conj().T
    c = np.linalg.norm(VL, axis=0) * np.linalg.norm(VR, axis=0) / np.abs(np.sum(VL.conj() * VR, 0))
    return float(c.max())


def _assembled(rng, i):
    kind = ["P", "P_int", "Q", "Q_ext"][i % 4]
    n_x = int(rng.integers(8, 23))
    n_y = int(rng.integers(8, min(22, 500 // n_x) + 1))
    g = make_grid((-3, 3, -3, 3), n_x, n_y)
    hp = HamiltonianParams(float(rng.uniform(0.15, 0.5)), float(rng.uniform(0, 2)))
    spec = PotentialSpec((EnvelopedQuadraticWell(L=float(rng.uniform(2, 6))),
                          GaussianBump(A=float(rng.uniform(-0.5, 0.5)), x0=-1.0, sigma=0.7)))
    core = Disc(0.0, 0.0, 1.0) if i % 2 else Rect(-0.9, 0.9, -0.8, 0.8)
    if kind == "P":
        return assemble_operator("P", g, hp, spec)
    if kind == "P_int":
        return assemble_operator("P_int", g, hp, flatten_exterior(spec, core, 0.6, 0.3))
    src = spec if kind == "Q" else fill_well(spec, core, 0.6, 0.3)
    dp = DistortionParams(1.0, 0.6, complex(0.0, -float(rng.uniform(0.05, 0.25))))
    return assemble_operator(kind, g, hp, distorted_coefficients(dp, src, g.x, g.y, hp.B))


def _compare(M, z0, k, tol):
    r = shift_invert_arnoldi(M, z0, k, tol=tol)
    dv = dense_eigs(M).values
    bound = 10 * tol * M.norm1()
    d = np.abs(dv - z0)
    order = np.argsort(d)
    errs = []
    for v in r.values:
        errs.append(np.min(np.abs(dv - v)))
    # the returned set is the k nearest, up to ties at the boundary
    kth = d[order[k - 1]]
    assert np.all(np.abs(r.values - z0) <= kth + bound)
    return max(errs), bound


@pytest.mark.criterion(8, "solver oracle equivalence")
def test_criterion_8_random_matrices():
    rng = np.random.default_rng(8)
    tol = 1e-10
    worst = 0.0
    cond = 0.0
    for i in range(200):
        A = _random_matrix(rng, i)
        cond = max(cond, _eig_condition(A))
        r, c = np.nonzero(A)
        M = from_coo(r, c, A[r, c], A.shape[0])
        scale = np.abs(np.linalg.eigvals(A)).max()
        z0 = complex(*rng.uniform(-0.8, 0.8, 2)) * scale
        err, bound = _compare(M, z0, int(rng.integers(1, 7)), tol)
        worst = max(worst, err / bound)
        assert err <= bound
    print(f"worst error / bound = {worst:.3e}, largest eigenvalue condition {cond:.1f}")


@pytest.mark.criterion(8, "solver oracle equivalence")
def test_criterion_8_assembled_matrices():
    rng = np.random.default_rng(88)
    tol = 1e-10
    for i in range(20):
        M = _assembled(rng, i)
        assert M.N <= 500
        z0 = complex(rng.uniform(-0.5, 0.5), -0.01)
        err, bound = _compare(M, z0, 5, tol)
        assert err <= bound


@pytest.mark.criterion(8, "solver oracle equivalence")
def test_criterion_8_dense_oracle():
    rng = np.random.default_rng(808)
    for n in (5, 20, 60, 150):
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        v = dense_eigs(A).values
        assert abs(v.sum() - np.trace(A)) <= 1e-12 * n * np.abs(A).sum(0).max()
        lam = np.arange(1, n + 1) * (1 + 0.5j)
        Qm, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        T = np.triu(rng.standard_normal((n, n)), 1) * 0.1 + np.diag(lam)
        got = np.sort_complex(dense_eigs(Qm @ T @ Qm.conj().T).values)
        assert np.max(np.abs(got - np.sort_complex(lam))) <= 1e-10 * n


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
