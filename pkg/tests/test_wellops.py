import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstark.potential import EnvelopedQuadraticWell, PotentialSpec, find_well_bottom
from magstark.regions import Disc, Rect
from magstark.wellops import (HarmonicModel, SurgeryError, barrier_height, fill_well,
                              flatten_exterior, harmonic_frequencies, predicted_levels,
                              weyl_count_prediction, z_independent_hint)


def brute_alphas(B, l1, l2):
    # the classical frequencies are the |eigenvalues| of the linearised flow
    M = np.array([[0, B, 1, 0], [0, 0, 0, 1], [-l1, 0, 0, 0], [0, -B * B - l2, -B, 0]], float)
    w = np.sort(np.abs(np.linalg.eigvals(M).imag))
    return w[0], w[2]


def test_alphas_match_linearised_flow():
    for B, l1, l2 in [(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (2.5, 0.7, 1.9)]:
        assert harmonic_frequencies(B, l1, l2) == pytest.approx(brute_alphas(B, l1, l2),
                                                                rel=1e-10)


def test_golden_ratio_case():
    a1, a2 = harmonic_frequencies(1.0, 1.0, 1.0)
    phi = (1 + math.sqrt(5)) / 2
    assert a1 == pytest.approx(phi - 1, rel=1e-15)
    assert a2 == pytest.approx(phi, rel=1e-15)


def test_zero_field_is_exact():
    assert harmonic_frequencies(0.0, 2.0, 3.0) == (math.sqrt(2.0), math.sqrt(3.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 10), st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_alpha_invariants(B, l1, l2):
    a1, a2 = harmonic_frequencies(B, l1, l2)
    assert a1 <= a2
    assert a1 * a2 == pytest.approx(math.sqrt(l1 * l2), rel=1e-12)
    assert a1 ** 2 + a2 ** 2 == pytest.approx(B * B + l1 + l2, rel=1e-12)


def test_predicted_levels_enumeration():
    lv = predicted_levels(0.0, 1.0, math.sqrt(2.0), 0.1, 0.5)
    brute = sorted(0.1 * (k1 + 0.5 + math.sqrt(2.0) * (k2 + 0.5))
                   for k1 in range(10) for k2 in range(10)
                   if 0.1 * (k1 + 0.5 + math.sqrt(2.0) * (k2 + 0.5)) <= 0.5)
    assert [v for _, _, v in lv] == pytest.approx(brute, abs=1e-15)


def test_tie_order_by_k2():
    lv = predicted_levels(0.0, 1.0, 1.0, 1.0, 3.0)
    assert [(k1, k2) for k1, k2, _ in lv] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_harmonic_model_lowest():
    spec = PotentialSpec((EnvelopedQuadraticWell(L=50.0),))
    m = HarmonicModel.from_bottom(find_well_bottom(spec), 1.0)
    lv = m.lowest(0.1, 6)
    assert len(lv) == 6 and lv[0][:2] == (0, 0)
    assert lv[0][2] == pytest.approx(m.E + 0.05 * (m.alpha1 + m.alpha2))


def test_z_independence_hint():
    assert not z_independent_hint(1.0, 2.0)
    assert z_independent_hint(*harmonic_frequencies(1.0, 1.0, 1.0))


def test_weyl_prediction_quadratic_well():
    # Vol = 2 pi^2 b^2 / sqrt(l1 l2) with b = 1, l = 1; 50 states at h = 0.1
    vol = 2 * math.pi ** 2
    assert weyl_count_prediction(vol, 0.1) == pytest.approx(50.0, rel=1e-14)


SPEC = PotentialSpec((EnvelopedQuadraticWell(A=0.0, L=3.0),))


def test_fill_and_flatten_blend():
    core = Disc(0.0, 0.0, 1.0)
    ext = fill_well(SPEC, core, level=0.35, ramp=0.4, b=0.25)
    inn = flatten_exterior(SPEC, core, level=0.35, ramp=0.4, b=0.25)
    x = np.array([0.0, 0.5, 1.2, 1.5, 2.5])
    y = np.zeros_like(x)
    u = SPEC.total(x, y)
    ue, ui = ext.total(x, y), inn.total(x, y)
    assert ue[0] == 0.35 and ue[1] == 0.35
    assert ui[0] == u[0] and ui[1] == u[1]
    assert ue[3] == u[3] and ue[4] == u[4]
    assert ui[3] == 0.35 and ui[4] == 0.35
    w = core.core_weight(1.2, 0.0, 0.4)
    assert ue[2] == pytest.approx(w * 0.35 + (1 - w) * u[2])
    assert ui[2] == pytest.approx(w * u[2] + (1 - w) * 0.35)


def test_complex_evaluation_only_outside_collar():
    ext = fill_well(SPEC, Disc(0.0, 0.0, 1.0), level=0.35, ramp=0.4)
    z = ext.total(np.array([2.5 - 0.2j]), np.array([0.0]))
    assert z[0] == pytest.approx(SPEC.total(np.array([2.5 - 0.2j]), np.array([0.0]))[0])
    with pytest.raises(SurgeryError):
        ext.total(np.array([0.5 - 0.2j]), np.array([0.0]))


def test_region_checks():
    with pytest.raises(SurgeryError):
        flatten_exterior(SPEC, Disc(0.0, 0.0, 0.3), level=0.5, ramp=0.3, b=0.25)
    with pytest.raises(SurgeryError):
        fill_well(SPEC, Disc(0.0, 0.0, 1.0), level=0.2, ramp=0.3, b=0.25)
    assert barrier_height(SPEC, Rect(-1, 1, -1, 1)) > 0.0
