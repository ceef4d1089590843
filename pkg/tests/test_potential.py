import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstark.potential import (EnvelopedQuadraticWell, GaussianBump, HamiltonianParams,
                                PotentialError, PotentialSpec, WellNotFound, Zero,
                                eval_potential, eval_symbol, eval_total_potential,
                                find_well_bottom, grad_hess)


def mp_well(t, x, y):
    xt, yt = x - t.x0, y - t.y0
    env = mp.exp(-(xt ** 2 + yt ** 2) / t.L ** 2) if math.isfinite(t.L) else 1
    return (t.A + t.lambda1 * xt ** 2 / 2 + t.lambda2 * yt ** 2 / 2 - xt) * env


def mp_bump(t, x, y):
    return t.A * mp.exp(-((x - t.x0) ** 2 + (y - t.y0) ** 2) / t.sigma ** 2)


WELL = EnvelopedQuadraticWell(A=0.2, x0=0.3, y0=-0.4, L=2.0, lambda1=1.3, lambda2=0.6)
BUMP = GaussianBump(A=0.7, x0=-1.0, y0=0.5, sigma=0.9)
SPEC = PotentialSpec((WELL, BUMP))


def test_values_against_mpmath():
    mp.mp.dps = 30
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(-4, 4, (40, 2)):
        ref = mp_well(WELL, mp.mpf(x), mp.mpf(y)) + mp_bump(BUMP, mp.mpf(x), mp.mpf(y))
        assert abs(eval_potential(SPEC, x, y) - float(ref)) <= 1e-14 * max(1, abs(float(ref)))


def test_complex_x_against_mpmath():
    mp.mp.dps = 30
    for x, y in [(0.5 - 0.3j, 0.2), (-2.0 + 0.1j, 1.1), (3.0 - 0.25j, -0.7)]:
        ref = complex(mp_well(WELL, mp.mpc(x), mp.mpf(y)) + mp_bump(BUMP, mp.mpc(x), mp.mpf(y)))
        got = complex(eval_potential(SPEC, np.array(x), y))
        assert abs(got - ref) <= 1e-13 * max(1, abs(ref))


def test_total_adds_stark_term():
    x, y = np.linspace(-2, 2, 9), np.linspace(-1, 1, 9)
    assert np.allclose(eval_total_potential(SPEC, x, y), x + eval_potential(SPEC, x, y))


def test_gradient_and_hessian_by_finite_differences():
    e = 1e-5
    for x, y in [(0.1, 0.2), (-1.3, 0.8), (2.0, -1.5)]:
        g, H = grad_hess(SPEC, x, y)
        u = lambda a, b: float(eval_total_potential(SPEC, a, b))
        gx = (u(x + e, y) - u(x - e, y)) / (2 * e)
        gy = (u(x, y + e) - u(x, y - e)) / (2 * e)
        assert np.allclose(g, [gx, gy], atol=1e-8)
        gxp, _ = grad_hess(SPEC, x + e, y)
        gxm, _ = grad_hess(SPEC, x - e, y)
        gyp, _ = grad_hess(SPEC, x, y + e)
        gym, _ = grad_hess(SPEC, x, y - e)
        Hfd = np.column_stack([(gxp - gxm) / (2 * e), (gyp - gym) / (2 * e)])
        assert np.allclose(H, Hfd, atol=1e-7)


def test_well_center_is_exact_critical_point():
    spec = PotentialSpec((WELL,))
    cp = find_well_bottom(spec, seed=(0.0, 0.0))
    assert cp.converged and cp.nondegenerate
    assert abs(cp.x - WELL.x0) < 1e-12 and abs(cp.y - WELL.y0) < 1e-12
    assert abs(cp.E - (WELL.x0 + WELL.A)) < 1e-13
    expected = np.diag([WELL.lambda1, WELL.lambda2]) - 2 * WELL.A / WELL.L ** 2 * np.eye(2)
    assert np.allclose(cp.hessian, expected, atol=1e-10)


def test_bare_quadratic():
    spec = PotentialSpec((EnvelopedQuadraticWell(lambda1=2.0, lambda2=0.5),))
    cp = find_well_bottom(spec, seed=(0.7, -0.4))
    assert cp.E == pytest.approx(0.0, abs=1e-14)
    assert cp.lambdas == pytest.approx((0.5, 2.0), abs=1e-12)


def test_no_well_raises():
    with pytest.raises(WellNotFound):
        find_well_bottom(PotentialSpec(()), seed=(0.0, 0.0))


def test_saddle_is_flagged():
    # bump maximum at the origin plus the Stark slope: the critical point is a maximum
    spec = PotentialSpec((GaussianBump(A=5.0, x0=0.0, y0=0.0, sigma=1.0),))
    cp = find_well_bottom(spec, seed=(0.1, 0.0))
    assert cp.converged and not cp.nondegenerate


def test_validation():
    with pytest.raises(PotentialError):
        EnvelopedQuadraticWell(lambda1=-1.0)
    with pytest.raises(PotentialError):
        GaussianBump(A=1.0, sigma=0.0)
    with pytest.raises(ValueError):
        HamiltonianParams(h=0.0, B=1.0)
    with pytest.raises(PotentialError):
        PotentialSpec.from_records([{"kind": "nope"}])


def test_records_round_trip():
    spec = PotentialSpec((WELL, BUMP, Zero()))
    again = PotentialSpec.from_records(spec.to_records())
    assert again == spec
    assert spec.kind == "sum" and PotentialSpec(()).kind == "zero"


def test_strip_check():
    spec = PotentialSpec((WELL,), delta0=0.5)
    with pytest.raises(PotentialError):
        eval_potential(spec, np.array(1.0 + 0.6j), 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0, 2))
def test_symbol_is_gauge_shifted_kinetic_plus_potential(x, y, xi, eta, B):
    p = eval_symbol(HamiltonianParams(0.1, B), SPEC, (x, y, xi, eta))
    expect = 0.5 * (xi + B * y) ** 2 + 0.5 * eta ** 2 + x + float(eval_potential(SPEC, x, y))
    assert p == pytest.approx(expect, rel=1e-12, abs=1e-12)
