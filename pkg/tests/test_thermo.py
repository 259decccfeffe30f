import math
from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccurv import thermo as th
from fraccurv.systems import GAPPED, SHIPPED, cantor, staircase_image, two_three
from oracles import moran_root

LN2_LN3 = math.log(2) / math.log(3)


def test_moran_examples():
    assert th.moran_dimension([Q(1, 3), Q(1, 3)]) == pytest.approx(LN2_LN3, abs=1e-15)
    assert th.moran_dimension([0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)
    d = th.moran_dimension([0.5, 1 / 3])
    assert abs(2**-d + 3**-d - 1) < 1e-12
    assert d == pytest.approx(float(moran_root([Q(1, 2), Q(1, 3)])), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.fractions(Q(1, 50), Q(1, 4)), min_size=2, max_size=4))
def test_moran_matches_high_precision_root(ratios):
    assert th.moran_dimension(ratios) == pytest.approx(float(moran_root(ratios)), abs=1e-13)


def test_pressure_examples():
    K = cantor()
    for n in (1, 4, 9):
        b = th.pressure_bracket(K, LN2_LN3, n)
        assert abs(b.lower) < 1e-14 and abs(b.upper) < 1e-14
    b0 = th.pressure_bracket(K, 0.0, 1)
    assert b0.lower == pytest.approx(math.log(2), abs=1e-15)
    assert b0.upper == pytest.approx(math.log(2), abs=1e-15)


def test_pressure_bracket_shrinks_for_image_system():
    F = staircase_image(1)
    w4 = th.pressure_bracket(F, 0.6, 4).width
    w8 = th.pressure_bracket(F, 0.6, 8).width
    assert w8 < w4


def test_conformal_dimension_brackets():
    for ifs, ref in ((cantor(), LN2_LN3), (two_three(), float(moran_root([0.5, Q(1, 3)])))):
        br = th.conformal_dimension(ifs)
        assert br.lo <= ref <= br.hi
        assert br.width < 1e-8
    br = th.conformal_dimension(staircase_image(1))
    assert br.lo <= LN2_LN3 <= br.hi


def test_pf_apply_identities():
    K = two_three()
    d = th.moran_dimension(K.ratios)
    one = th.CylinderFunction(5, np.ones(2**5), 0.0)
    assert np.allclose(th.pf_apply(K, d, one).values, 1.0, atol=1e-14)
    assert np.allclose(th.pf_apply(K, 0.0, one).values, 2.0, atol=0)


def test_pf_iteration_contracts_on_image_system():
    F = staircase_image(1)
    d = F.symbolic.delta
    f = th.CylinderFunction(8, np.ones(2**8), 0.0)
    diffs = []
    for _ in range(50):
        g = th.pf_apply(F, d, f)
        g = th.CylinderFunction(8, g.values / g.values.max(), 0.0)
        diffs.append(np.abs(g.values - f.values).max())
        f = g
    assert diffs[-1] < diffs[0] * 1e-6
    assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(diffs[5:], diffs[6:]))


@pytest.mark.parametrize("name", GAPPED)
def test_eigenfunction_is_one_for_similarities(name):
    K = SHIPPED[name]()
    d = th.moran_dimension(K.ratios)
    h = th.pf_eigenfunction(K, d, 8)
    assert np.abs(h.values - 1).max() < 1e-10


def test_eigenfunction_image_system_closed_form():
    F = staircase_image(1)
    gn = F.symbolic
    errs = []
    for m in (8, 10):
        h = th.pf_eigenfunction(F, gn.delta, m)
        G, _ = gn.cylinder_tables(m)
        # h = e^{delta psi} normalized against the conformal measure
        ref = (G * gn.em1 + 1) * math.log(gn.E) / gn.em1
        err = np.abs(h.values - ref).max()
        assert err <= h.error + 1e-12
        errs.append(err)
    assert errs[1] < errs[0]


def test_conformal_measure_examples():
    nu = th.conformal_measure(cantor(), LN2_LN3, 3)
    assert np.allclose(nu.masses, 1 / 8, atol=1e-15)
    K = two_three()
    d = th.moran_dimension(K.ratios)
    nu1 = th.conformal_measure(K, d, 1)
    assert nu1.masses == pytest.approx([2**-d, 3**-d], abs=1e-14)
    assert nu1.masses[0] == pytest.approx(0.5792, abs=5e-5)
    for name in GAPPED:
        ifs = SHIPPED[name]()
        assert math.fsum(th.conformal_measure(ifs, th.moran_dimension(ifs.ratios), 4).masses) == \
            pytest.approx(1.0, abs=1e-14)


def test_conformal_measure_image_exact_masses():
    F = staircase_image(1)
    gn = F.symbolic
    m = 10
    nu = th.conformal_measure(F, gn.delta, m)
    G, p = gn.cylinder_tables(m)
    exact = (np.log1p((G + p) * gn.em1) - np.log1p(G * gn.em1)) / math.log(gn.E)
    assert np.abs(nu.masses / exact - 1).max() <= nu.rel_error


def test_gibbs_entropy_examples():
    assert th.gibbs_entropy(cantor(), LN2_LN3).value == pytest.approx(math.log(2), abs=1e-10)
    K = two_three()
    d = th.moran_dimension(K.ratios)
    ref = -d * (math.log(0.5) * 2**-d + math.log(1 / 3) * 3**-d)
    assert th.gibbs_entropy(K, d).value == pytest.approx(ref, abs=1e-12)


def test_gibbs_entropy_image_system():
    F = staircase_image(1)
    e = th.gibbs_entropy(F, F.symbolic.delta, 14)
    assert abs(e.value - math.log(2)) <= e.error
    assert e.error < 0.01


def test_gibbs_measure_of_similarity_is_conformal():
    K = two_three()
    d = th.moran_dimension(K.ratios)
    mu = th.gibbs_measure(K, d, 6)
    nu = th.conformal_measure(K, d, 6)
    assert np.allclose(mu.masses, nu.masses, rtol=1e-10)
    assert np.allclose(mu.coarsen(1), [2**-d, 3**-d], rtol=1e-10)
