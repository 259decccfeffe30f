import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccurv.errors import InvalidSpecError
from fraccurv.images import (GnMap, StaircaseCdf, mass_condition_check, gn_eval, image_gap_ledger,
                             psi_decomposition, staircase_eval)
from fraccurv.symbolic import index_word
from fraccurv.systems import cantor, fifths, flipped, two_three
from oracles import cantor_image_hulls


@pytest.fixture(scope="module")
def g1():
    return GnMap(cantor(), 1)


def test_staircase_examples():
    S = StaircaseCdf(cantor())
    assert staircase_eval(S, 0.5, 1e-12) == (0.5, 0.0)
    assert staircase_eval(S, -0.3, 1e-12) == (0.0, 0.0)
    assert staircase_eval(S, 4 / 27, 1e-12) == (0.25, 0.0)
    assert staircase_eval(S, 1.7, 1e-12) == (1.0, 0.0)


def test_staircase_exact_on_gap_closures():
    S = StaircaseCdf(cantor())
    assert S.eval(1 / 3)[0] == 0.5 and S.eval(2 / 3)[0] == 0.5
    assert S.eval(7 / 9)[0] == 0.75
    v, err = S.eval(0.123456789, tol=1e-9)
    assert err <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_staircase_monotone(x, y):
    S = StaircaseCdf(cantor())
    lo, hi = min(x, y), max(x, y)
    (a, ea), (b, eb) = S.eval(lo), S.eval(hi)
    assert a - ea <= b + eb


def test_staircase_moments():
    g = GnMap(cantor(), 1)
    assert g._m[1] == pytest.approx(0.5, abs=1e-16)
    assert g._m[2] == pytest.approx(0.3, abs=1e-16)


def test_gn_endpoints(g1):
    assert gn_eval(g1, -1.0) == (0.0, 0.0)
    assert gn_eval(g1, 0.0) == (1.0, 0.0)
    v, err = gn_eval(g1, 1.0)
    assert 4 / 3 < v < 2
    _, hi = cantor_image_hulls(1, 16)
    assert v == pytest.approx(hi[-1], abs=1e-13)


def test_gn_matches_oracle_at_cylinder_starts(g1):
    # depth-16 oracle: its leaf expansion error is negligible; cylinder k at
    # depth 10 starts where depth-16 cylinder 64 k starts
    lo, _ = cantor_image_hulls(1, 16)
    lo = lo[::64]
    pos = np.zeros(2**10)
    for j in range(10):
        pos += ((np.arange(2**10) >> (9 - j)) & 1) * 2.0 * 3.0 ** -(j + 1)
    for k in range(0, 2**10, 37):
        assert g1.g(float(pos[k]))[0] == pytest.approx(lo[k], abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0))
def test_gn_inverse_roundtrip(x):
    g = GnMap(cantor(), 2)
    y, _ = g.g(x)
    xr, err = g.g_inv(y)
    assert abs(xr - x) <= err + 1e-14


def test_derivative_bounds():
    for n in (1, 2, 3):
        g = GnMap(cantor(), n)
        v = np.linspace(0, 1, 101)
        d = g.w(v)
        assert d.max() == 1.0
        assert d.min() == pytest.approx(math.exp(-math.log(3) * n), rel=1e-14)
        assert np.all(np.diff(d) < 0)


def test_induced_system_shape(g1):
    F = g1.induced_system()
    assert F.domain == (1.0, 1.0 + g1.hull_length)
    assert F.maps[0].eval(1.0) == 1.0
    assert F.maps[1].eval(F.domain[1]) == pytest.approx(F.domain[1], rel=1e-15)
    assert not F.is_affine


def test_rep_derivatives_hook_matches_maps(g1):
    F = g1.induced_system()
    D = g1.rep_derivatives(4)
    for k in range(16):
        w = index_word(k, 4, 2)
        x = 0.0
        for s in reversed(w):
            x = x / 3 + (2 / 3 if s == 2 else 0.0)
        for i in range(2):
            assert D[i, k] == pytest.approx(F.maps[i].deriv_at_base(x), rel=1e-14)


def test_word_ranges_enclose_chain_rule(g1):
    F = g1.induced_system()
    lo, hi = g1.word_log_derivative_ranges(3)
    for k in range(8):
        w = index_word(k, 3, 2)
        for x in np.linspace(0, 1, 41):
            # chain rule with base points: the inner images stay in base coordinates
            total, xb = 0.0, float(x)
            for s in reversed(w):
                total += math.log(F.maps[s - 1].deriv_at_base(xb))
                xb = xb / 3 + (2 / 3 if s == 2 else 0.0)
            assert lo[k] - 1e-13 <= total <= hi[k] + 1e-13


def test_main_gap_lengths_match_ledger(g1):
    led = image_gap_ledger(g1, 1e-3)
    L = np.sort(np.concatenate([g1.main_gap_lengths(n) for n in range(4)]))[::-1]
    assert np.allclose(np.sort(led.lengths)[::-1][: len(L)], L, rtol=1e-14)


def test_image_hull_consistent_with_pieces(g1):
    gaps, (_, lv, le) = g1._pieces(1e-4)
    total = math.fsum(np.concatenate([gaps["len"], lv]))
    assert total == pytest.approx(g1.hull_length, rel=1e-14)


def test_psi_decomposition(g1):
    pd = psi_decomposition(g1, 10)
    lo, hi = pd.psi_range
    assert 0.0 <= lo and hi <= math.log(3)
    assert pd.residual < 1e-10
    assert np.allclose(pd.zeta, math.log(3))
    base = psi_decomposition(GnMap(cantor(), 0), 6)
    assert np.all(base.psi == 0.0)
    assert np.allclose(base.xi, base.zeta, atol=1e-15)


@pytest.mark.parametrize("level", [1, 2])
def test_condition_holds_for_images(level):
    rep = mass_condition_check(GnMap(cantor(), level), 12)
    assert rep.status == "pass"
    assert len(rep.t) == 32
    assert rep.lhs_lo[0] == 0.0 and rep.rhs_hi[0] == 0.0


def test_condition_fails_for_base():
    rep = mass_condition_check(GnMap(cantor(), 0), 12)
    assert rep.status == "fail"
    # all mass sits at psi = 0, so the left side is 1 on (0, a)
    assert np.all(rep.lhs_lo[1:] == 1.0)
    assert np.all(rep.rhs_hi[1:] < 1.0)


def test_condition_inconclusive_when_shallow():
    rep = mass_condition_check(GnMap(cantor(), 1), 3, ambiguity_limit=1e-3)
    assert rep.status == "inconclusive"


def test_other_lattice_base():
    g = GnMap(fifths(), 1)
    assert g.a == pytest.approx(math.log(5), rel=1e-14)
    assert mass_condition_check(g, 7).status == "pass"
    F = g.induced_system()
    assert F.nsym == 3


def test_invalid_bases():
    with pytest.raises(InvalidSpecError):
        GnMap(two_three(), 1)
    with pytest.raises(InvalidSpecError):
        GnMap(flipped(), 1)
    with pytest.raises(ValueError):
        GnMap(cantor(), -1)
