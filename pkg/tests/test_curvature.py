import math

import numpy as np
import pytest

from fraccurv import curvature as cv
from fraccurv import gaps as gp
from fraccurv.errors import InvalidSpecError, RangeError
from fraccurv.images import GnMap
from fraccurv.symbolic import primary_gaps
from fraccurv.systems import GAPPED, SHIPPED, cantor, staircase_image, two_three, unit_interval
from oracles import PARAMS, cesaro_by_trapezoid, closed_form_constants

DELTA = math.log(2) / math.log(3)


def test_cantor_gap_sums_are_one_half():
    for s in cv.gap_sum_sequence(cantor(), DELTA, 12):
        assert s.value == pytest.approx(0.5, abs=1e-15)
        assert s.width == 0.0


@pytest.mark.parametrize("name", GAPPED)
def test_gap_sums_constant_for_similarities(name):
    ifs = SHIPPED[name]()
    d = cv.dimension_of(ifs)
    seq = [s.value for s in cv.gap_sum_sequence(ifs, d, 10)]
    assert max(seq) - min(seq) <= 1e-14 * seq[0]
    want = math.fsum(float(L) ** d for L in primary_gaps(ifs).lengths)
    assert seq[0] == pytest.approx(want, rel=1e-15)


def test_image_gap_sums_converge_to_weighted_integral():
    F = staircase_image(1)
    d = F.symbolic.delta
    # (1/3)^delta * int_0^1 (v (E-1) + 1)^(-1) dv with E = 2
    target = 0.5 * math.log(2)
    seq = cv.gap_sum_sequence(F, d, 14)
    for s in seq:
        assert abs(s.value - target) <= s.width
    assert seq[-1].width < seq[6].width


def test_gap_sum_depth_budget():
    with pytest.raises(InvalidSpecError):
        cv.gap_sum_sequence(cantor(), DELTA, 21)


@pytest.mark.parametrize("name", GAPPED)
def test_theoretical_constants_match_high_precision(name):
    ifs = SHIPPED[name]()
    ratios = [r for r, _ in PARAMS[name]]
    lengths = [float(L) for L in primary_gaps(SHIPPED[name](exact=True)).lengths]
    ref = closed_form_constants(ratios, lengths)
    c = cv.theoretical_constants(ifs)
    assert c.delta == pytest.approx(ref["delta"], rel=1e-14)
    assert c.c == pytest.approx(ref["c"], rel=1e-13)
    assert c.entropy == pytest.approx(ref["H"], rel=1e-13)
    assert c.content == pytest.approx(ref["content"], rel=1e-12)
    assert c.mass0 == pytest.approx(ref["mass0"], rel=1e-12)
    assert c.mass1 == pytest.approx(2 * c.mass0 / (1 - c.delta), rel=1e-14)


def test_cantor_constants_values():
    c = cv.theoretical_constants(cantor())
    assert c.content == pytest.approx(2 ** (1 - DELTA) * 0.5 / ((1 - DELTA) * math.log(2)), rel=1e-14)
    assert c.mass0 == pytest.approx(0.46582, abs=1e-5)


def test_interval_regime_has_no_constants():
    from fraccurv.errors import IntervalRegimeError
    with pytest.raises(IntervalRegimeError):
        cv.theoretical_constants(unit_interval())


def test_content_scan_value():
    prof = gp.attractor_profile(cantor(), 1e-3)
    s = cv.content_scan(prof, DELTA, [1 / 18])
    assert s.content[0] == pytest.approx(18 ** (1 - DELTA) * 8 / 9, rel=1e-14)
    assert s.curvature[0] == pytest.approx((1 / 18) ** DELTA * 2, rel=1e-14)
    with pytest.raises(RangeError):
        cv.content_scan(prof, DELTA, [1e-5])


def test_interval_content_scan():
    prof = gp.attractor_profile(unit_interval(), 1e-6)
    s = cv.content_scan(prof, 1.0, cv.geometric_grid(1e-6, 1e-2))
    assert np.allclose(s.content, 1 + 2 * s.eps, rtol=1e-15)


@pytest.mark.parametrize("name", ["cantor", "two_three", "flipped"])
def test_average_matches_trapezoid_oracle(name):
    ifs = SHIPPED[name]()
    d = cv.dimension_of(ifs)
    T = 1e-6
    prof = gp.attractor_profile(ifs, T)
    exact1 = cv.average_content(prof, d, T)
    exact0 = cv.average_curvature0(prof, d, T)
    num1 = cesaro_by_trapezoid(lambda e: e ** (d - 1) * prof.volume_many(e), T)
    num0 = cesaro_by_trapezoid(lambda e: e**d * prof.count_many(e) / 2, T)
    assert exact1 == pytest.approx(num1, rel=2e-5)
    assert exact0 == pytest.approx(num0, rel=2e-5)


def test_interval_average_closed_form():
    prof = gp.attractor_profile(unit_interval(), 1e-12)
    T = 1e-10
    want = 1 + 2 * (1 - T) / abs(math.log(T))
    assert cv.average_content(prof, 1.0, T) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("name", GAPPED)
def test_cesaro_stability(name):
    ifs = SHIPPED[name]()
    d = cv.dimension_of(ifs)
    prof = gp.attractor_profile(ifs, 1e-20)
    a = [cv.average_content(prof, d, T) for T in (1e-5, 1e-10, 1e-20)]
    assert abs(a[2] - a[1]) < abs(a[1] - a[0])


def test_exact_extrema_bound_dense_grid():
    prof = gp.attractor_profile(cantor(), 1e-6)
    ex = cv.exact_extrema(prof, DELTA, 1e-5, 1e-3)
    s = cv.content_scan(prof, DELTA, cv.geometric_grid(1e-5, 1e-3, 4000))
    assert ex["min"] <= s.content.min() <= ex["min"] * (1 + 1e-4)
    assert ex["max"] * (1 - 1e-4) <= s.content.max() <= ex["max"] * (1 + 1e-14)
    assert ex["count_min"] <= (s.curvature * 2).min() * (1 + 1e-14)
    assert ex["count_max"] >= (s.curvature * 2).max() * (1 - 1e-14)


def test_cantor_oscillates():
    c = cv.theoretical_constants(cantor())
    prof = gp.attractor_profile(cantor(), 1e-9)
    s = cv.content_scan(prof, DELTA, cv.geometric_grid(1e-9, 1e-3))
    rep = cv.oscillation_profile(s, math.log(3))
    assert rep.ratio > 1.01
    assert rep.exact_min < c.content < rep.exact_max
    assert rep.exact_min <= rep.min and rep.max <= rep.exact_max


def test_constant_series_has_unit_ratio():
    prof = gp.attractor_profile(unit_interval(), 1e-12)
    s = cv.content_scan(prof, 1.0, cv.geometric_grid(1e-12, 1e-10))
    s.content = np.full_like(s.content, 3.0)
    assert cv.oscillation_profile(s, 1.0).ratio == 1.0


def test_oscillation_needs_one_period():
    prof = gp.attractor_profile(cantor(), 1e-4)
    s = cv.content_scan(prof, DELTA, cv.geometric_grid(1e-4, 2e-4))
    with pytest.raises(ValueError):
        cv.oscillation_profile(s, math.log(3))


def test_image_does_not_oscillate():
    gn = GnMap(cantor(), 1)
    prof = gn.profile(1e-7)
    s = cv.content_scan(prof, gn.delta, cv.geometric_grid(1e-7, 1e-4))
    assert s.content.max() / s.content.min() < 1.005


def test_nonlattice_decade_ranges_shrink():
    ifs = two_three()
    d = cv.dimension_of(ifs)
    prof = gp.attractor_profile(ifs, 1e-8)
    ranges = []
    for k in range(3, 8):
        s = cv.content_scan(prof, d, cv.geometric_grid(10.0 ** -(k + 1), 10.0**-k))
        ranges.append(s.content.max() - s.content.min())
    assert all(b < a for a, b in zip(ranges, ranges[1:]))


def test_predictor_coefficient_and_periodicity():
    K = cantor()
    a = math.log(3)
    H = math.log(2)
    assert cv.predictor_coefficient(K) == pytest.approx(a / ((1 - math.exp(-DELTA * a)) * H / DELTA),
                                                        rel=1e-14)
    for T in (25.0, 26.3, 29.9):
        assert cv.lattice_predictor(K, 1.0, T + a) == pytest.approx(cv.lattice_predictor(K, 1.0, T),
                                                                     rel=1e-12)
    with pytest.raises(InvalidSpecError):
        cv.lattice_predictor(two_three(), 1.0, 20.0)


def test_predictor_matches_exact_count():
    K = cantor()
    prof = gp.attractor_profile(K, math.exp(-31))
    for T in np.linspace(25, 30, 41):
        truth = math.exp(-DELTA * T) * prof.count(math.exp(-T)) / 2
        assert abs(cv.lattice_predictor(K, 1.0, T) / truth - 1) < 1e-10


@pytest.mark.parametrize("name", GAPPED)
def test_rataj_winter_on_shipped(name):
    ifs = SHIPPED[name]()
    d = cv.dimension_of(ifs)
    prof = gp.attractor_profile(ifs, 1e-8)
    s = cv.content_scan(prof, d, cv.geometric_grid(1e-8, 1e-3))
    rep = cv.rataj_winter_check(s, d)
    assert rep.sandwich_ok
    assert rep.identity_residual < 1e-12


def test_rataj_winter_interval_trivial():
    prof = gp.attractor_profile(unit_interval(), 1e-8)
    s = cv.content_scan(prof, 1.0, cv.geometric_grid(1e-8, 1e-3))
    rep = cv.rataj_winter_check(s, 1.0)
    assert rep.identity_residual == 0.0


def test_localized_disjoint_window_is_zero():
    est, pred = cv.localized_measure_estimate(cantor(), gp.Window.half_line(-1.0), 1e-6)
    assert est == 0.0 and pred == 0.0


def test_window_mass_half_line():
    val, amb = cv.window_mass(cantor(), DELTA, gp.Window.half_line(0.4))
    assert val == pytest.approx(0.5, abs=1e-15) and amb == 0.0
    val, amb = cv.window_mass(cantor(), DELTA, gp.Window.half_line(0.5))
    assert val == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("name", ["cantor", "two_three"])
def test_count_scaling_exponent_trend(name):
    # eps^t lambda0 ~ eps^(t - delta): decays as eps -> 0 above delta, grows below
    ifs = SHIPPED[name]()
    d = cv.dimension_of(ifs)
    prof = gp.attractor_profile(ifs, 1e-9)
    for t, sign in ((d + 0.05, -1), (d - 0.05, 1)):
        means = []
        for k in range(3, 9):
            eps = cv.geometric_grid(10.0 ** -(k + 1), 10.0**-k)
            means.append(float(np.mean(eps**t * prof.count_many(eps))))
        steps = np.sign(np.diff(means))
        assert np.all(steps == sign)
