"""Minkowski content and fractal curvature: closed forms and exact scans.

Everything here works on a :class:`~fraccurv.gaps.VolumeProfile`, on which
``lambda1(F_eps) = A + B eps`` and ``lambda0 = B`` between consecutive
breakpoints.  That makes Cesaro averages and extrema of the rescaled
series computable in closed form, segment by segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntervalRegimeError, InvalidSpecError
from .gaps import VolumeProfile, Window, localized_profile
from .symbolic import (IfsSpec, Lattice, compose_eval, cylinder_hull, distortion_bound,
                       lattice_classify, primary_gaps)
from .thermo import conformal_dimension, conformal_measure, gibbs_entropy, moran_dimension


@dataclass(frozen=True)
class GapSum:
    depth: int
    value: float
    width: float


@dataclass(frozen=True)
class TheoreticalConstants:
    """Closed-form constants of a self-conformal set of zero length.

    ``content`` is the average Minkowski content; ``mass0`` and ``mass1`` are
    the total masses of the average curvature measures.
    """

    delta: float
    c: float
    c_width: float
    entropy: float
    entropy_error: float
    content: float
    mass0: float
    mass1: float


@dataclass
class ScanSeries:
    """Rescaled volume and boundary count on a grid of scales.

    ``content[k] = eps**(delta-1) * lambda1`` and
    ``curvature[k] = eps**delta * lambda0 / 2`` at ``eps[k]``.
    """

    eps: np.ndarray
    content: np.ndarray
    curvature: np.ndarray
    delta: float
    profile: VolumeProfile


@dataclass(frozen=True)
class OscillationReport:
    period: float
    window: tuple
    min: float
    max: float
    argmin: float
    argmax: float
    exact_min: float
    exact_max: float
    overall_min: float
    overall_max: float

    @property
    def ratio(self) -> float:
        return self.max / self.min

    @property
    def overall_ratio(self) -> float:
        return self.overall_max / self.overall_min


@dataclass(frozen=True)
class RatajWinterReport:
    tail: tuple
    content_min: float
    content_max: float
    bound_min: float
    bound_max: float
    sandwich_ok: bool
    identity_residual: float
    identity_ok: bool


def _gap_lengths_at_depth(ifs: IfsSpec, n: int) -> np.ndarray:
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "main_gap_lengths"):
        return sym.main_gap_lengths(n)
    fam = primary_gaps(ifs)
    words = [()]
    for _ in range(n):
        words = [(i,) + w for i in range(1, ifs.nsym + 1) for w in words]
    out = []
    for w in words:
        for p, q in fam.gaps:
            out.append(abs(float(compose_eval(ifs, w, q)) - float(compose_eval(ifs, w, p))))
    return np.array(out)


def gap_sum_sequence(ifs: IfsSpec, delta: float, n_max: int) -> list:
    """``c_n = sum over words of length n and primary gaps of |phi_w(L^i)|**delta``.

    Each entry carries ``width = c_n (rho_n**(2 delta) - 1)``, a bound on
    ``|c_n - c|`` from bounded distortion (zero for similarities).
    """
    if n_max > 20:
        raise InvalidSpecError("depth budget exceeded (n_max <= 20)")
    out = []
    if ifs.is_affine:
        r = np.abs([float(m.ratio) for m in ifs.maps])
        base = np.array([float(L) for L in primary_gaps(ifs).lengths]) ** delta
        for n in range(n_max + 1):
            logs = np.zeros(1)
            for _ in range(n):
                logs = (np.log(r)[:, None] + logs[None, :]).ravel()
            val = math.fsum((np.exp(delta * logs)[:, None] * base[None, :]).ravel())
            out.append(GapSum(n, val, 0.0))
        return out
    for n in range(n_max + 1):
        lens = _gap_lengths_at_depth(ifs, n)
        val = math.fsum(lens**delta)
        rho = distortion_bound(ifs, n).rho
        out.append(GapSum(n, val, val * (rho ** (2 * delta) - 1.0)))
    return out


def dimension_of(ifs: IfsSpec) -> float:
    """Minkowski dimension: Moran root, closed form, or pressure-bracket midpoint."""
    if ifs.is_affine:
        return moran_dimension(ifs.ratios)
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "delta"):
        return sym.delta
    return conformal_dimension(ifs).mid


def theoretical_constants(ifs: IfsSpec, depth: int = 10) -> TheoreticalConstants:
    """Dimension, gap constant, entropy and the derived content and masses.

    Raises
    ------
    IntervalRegimeError
        When the attractor is an interval; then both scaling exponents are
        zero and the curvature measures are the halved boundary count and
        Lebesgue measure of the interval.
    """
    primary_gaps(ifs)
    delta = dimension_of(ifs)
    if not delta < 1:
        raise IntervalRegimeError(ifs.hull)
    seq = gap_sum_sequence(ifs, delta, 0 if ifs.is_affine else depth)
    c, cw = seq[-1].value, seq[-1].width
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "entropy"):
        H, Herr = sym.entropy, 0.0
    else:
        est = gibbs_entropy(ifs, delta, depth)
        H, Herr = est.value, est.error
    mass0 = 2.0**-delta * c / H
    mass1 = 2.0 ** (1 - delta) * c / ((1 - delta) * H)
    return TheoreticalConstants(delta, c, cw, H, Herr, mass1, mass0, mass1)


def geometric_grid(eps_min: float, eps_max: float, points_per_decade: int = 64) -> np.ndarray:
    """Geometric grid from ``eps_min`` to ``eps_max`` inclusive."""
    if not (0 < eps_min < eps_max):
        raise ValueError("need 0 < eps_min < eps_max")
    n = max(2, int(round(math.log10(eps_max / eps_min) * points_per_decade)) + 1)
    return np.geomspace(eps_min, eps_max, n)


def content_scan(profile: VolumeProfile, delta: float, grid) -> ScanSeries:
    """Evaluate both rescaled series on ``grid`` from the exact profile."""
    eps = np.asarray(grid, dtype=float)
    vol = profile.volume_many(eps)
    cnt = profile.count_many(eps)
    return ScanSeries(eps, eps ** (delta - 1) * vol, eps**delta * cnt / 2, delta, profile)


def _segments(profile: VolumeProfile, lo: float, hi: float):
    """Segment endpoints and coefficients of ``lambda1 = A + B eps`` on ``[lo, hi]``."""
    if lo < float(profile.min_eps):
        from .errors import RangeError
        raise RangeError(f"T={lo} below the profile resolution {float(profile.min_eps)}")
    bp = np.asarray(profile.breakpoints(), dtype=float)
    bp = bp[(bp > lo) & (bp < hi)]
    edges = np.concatenate([[lo], bp, [hi]])
    neg = np.asarray(profile._neg, dtype=float)
    k = np.searchsorted(neg, -2 * edges[:-1], side="left")
    suf = np.asarray(profile._suffix, dtype=float)
    cnt = np.asarray(profile._cnt, dtype=float)
    A = float(profile.residual) + suf[k]
    B = 2 * (profile.components + cnt[k])
    return edges, A, B


def _content_integral(edges, A, B, delta):
    a, b = edges[:-1], edges[1:]
    if delta == 1:
        parts = A * (np.log(b) - np.log(a)) + B * (b - a)
    else:
        parts = A * (b ** (delta - 1) - a ** (delta - 1)) / (delta - 1) + B * (b**delta - a**delta) / delta
    return math.fsum(parts)


def _curvature_integral(edges, B, delta):
    a, b = edges[:-1], edges[1:]
    if delta == 0:
        parts = B * (np.log(b) - np.log(a))
    else:
        parts = B * (b**delta - a**delta) / delta
    return math.fsum(parts) / 2


def average_content(profile: VolumeProfile, delta: float, T: float) -> float:
    """``|ln T|**-1 * int_T^1 eps**(delta-2) lambda1(F_eps) d eps``, integrated exactly.

    For a localized profile the integrand above the window clearance is that
    of the trimmed pieces; this changes the value by ``O(1/|ln T|)`` only.
    """
    if not 0 < T < 1:
        raise ValueError("T must lie in (0, 1)")
    edges, A, B = _segments(profile, T, 1.0)
    return _content_integral(edges, A, B, delta) / abs(math.log(T))


def average_curvature0(profile: VolumeProfile, delta: float, T: float) -> float:
    """``|ln T|**-1 * int_T^1 eps**(delta-1) lambda0(bd F_eps) d eps / 2``, exactly."""
    if not 0 < T < 1:
        raise ValueError("T must lie in (0, 1)")
    edges, _, B = _segments(profile, T, 1.0)
    return _curvature_integral(edges, B, delta) / abs(math.log(T))


def exact_extrema(profile: VolumeProfile, delta: float, lo: float, hi: float) -> dict:
    """Extrema of ``eps**(delta-1) lambda1`` and ``eps**delta lambda0`` on ``[lo, hi]``.

    On a segment ``M(eps) = eps**(delta-1) (A + B eps)`` has a single
    interior minimum at ``(1-delta) A / (delta B)``; ``eps**delta B`` grows,
    so its supremum is the left limit at the right end of the segment.
    The returned ``local_*`` entries restrict to local extrema of ``M``
    that are not forced by the window boundary.
    """
    edges, A, B = _segments(profile, lo, hi)
    a, b = edges[:-1], edges[1:]

    def M(e, A_, B_):
        return e ** (delta - 1) * (A_ + B_ * e)

    crit = (1 - delta) * A / (delta * B)
    inside = (crit > a) & (crit < b)
    cand_e = np.concatenate([a, b, crit[inside]])
    cand_v = np.concatenate([M(a, A, B), M(b, A, B), M(crit[inside], A[inside], B[inside])])
    imin, imax = int(np.argmin(cand_v)), int(np.argmax(cand_v))
    c_lo = a**delta * B
    c_hi = b**delta * B
    # local maxima: segment corners (A, B continuous in lambda1); local minima: interior critical points
    corners = M(b[:-1], A[:-1], B[:-1])
    loc_max = np.concatenate([corners, M(b[-1:], A[-1:], B[-1:])]) if len(a) else np.zeros(0)
    mins = M(crit[inside], A[inside], B[inside])
    res = dict(min=float(cand_v[imin]), argmin=float(cand_e[imin]),
               max=float(cand_v[imax]), argmax=float(cand_e[imax]),
               count_min=float(c_lo.min()), count_max=float(c_hi.max()),
               local_min=float(mins.min()) if mins.size else math.nan,
               local_max=float(loc_max.max()) if loc_max.size else math.nan)
    return res


def oscillation_profile(series: ScanSeries, a: float) -> OscillationReport:
    """Extrema of the content series over its last full period ``[eps0, eps0 e**a]``."""
    eps = series.eps
    e0 = float(eps.min())
    e1 = e0 * math.exp(a)
    if e1 > float(eps.max()) * (1 + 1e-12):
        raise ValueError("grid shorter than one period")
    sel = (eps >= e0) & (eps <= e1)
    vals = series.content[sel]
    dom = eps[sel]
    ex = exact_extrema(series.profile, series.delta, e0, min(e1, float(eps.max())))
    return OscillationReport(a, (e0, e1), float(vals.min()), float(vals.max()),
                             float(dom[np.argmin(vals)]), float(dom[np.argmax(vals)]),
                             ex["min"], ex["max"],
                             float(series.content.min()), float(series.content.max()))


def cesaro_identity_residual(profile: VolumeProfile, delta: float, T: float) -> float:
    """Relative defect of the integration-by-parts identity between both averages.

    Integrating ``eps**(delta-2) lambda1`` by parts with ``d lambda1 = lambda0``
    gives
    ``avg1 = 2 avg0 / (1 - delta) + (T**(delta-1) lambda1(T) - lambda1(1)) / ((1 - delta) |ln T|)``.
    """
    avg1 = average_content(profile, delta, T)
    avg0 = average_curvature0(profile, delta, T)
    lt = abs(math.log(T))
    vT = float(profile.volume_many(np.array([T]))[0])
    edges, A, B = _segments(profile, 1.0 - 1e-12, 1.0)
    v1 = float(A[-1] + B[-1] * 1.0)
    rhs = 2 * avg0 / (1 - delta) + (T ** (delta - 1) * vT - v1) / ((1 - delta) * lt)
    return abs(avg1 - rhs) / abs(avg1)


def rataj_winter_check(series: ScanSeries, delta: float, period: float | None = None,
                       T: float | None = None, rtol: float = 1e-10) -> RatajWinterReport:
    """Finite-scale check that content extrema are controlled by boundary counts.

    On the tail ``[eps_min, eps_min * e**period]`` (one decade if no period)
    every local extremum of ``eps**(delta-1) lambda1`` must lie between the
    extrema of ``eps**delta lambda0 / (1 - delta)``.  Also verifies the exact
    identity between the two Cesaro averages at ``T`` (default: grid minimum).
    """
    e0 = float(series.eps.min())
    span = math.exp(period) if period else 10.0
    e1 = min(e0 * span, float(series.eps.max()))
    ex = exact_extrema(series.profile, delta, e0, e1)
    if delta >= 1:
        # interval regime: lambda1 = |Y| + 2 eps, nothing to compare
        return RatajWinterReport((e0, e1), ex["min"], ex["max"], math.nan, math.nan, True, 0.0, True)
    bmin = ex["count_min"] / (1 - delta)
    bmax = ex["count_max"] / (1 - delta)
    lo = ex["local_min"] if not math.isnan(ex["local_min"]) else ex["min"]
    hi = ex["local_max"] if not math.isnan(ex["local_max"]) else ex["max"]
    ok = (lo >= bmin * (1 - rtol)) and (hi <= bmax * (1 + rtol))
    T = T if T is not None else e0
    if delta < 1:
        resid = cesaro_identity_residual(series.profile, delta, T)
    else:
        resid = 0.0
    return RatajWinterReport((e0, e1), lo, hi, bmin, bmax, bool(ok), resid, resid < 1e-9)


def predictor_coefficient(ifs: IfsSpec, nu_b: float = 1.0) -> float:
    """``a nu(B) / ((1 - e**(-delta a)) int xi d mu)`` for a lattice self-similar system."""
    a = _lattice_period(ifs)
    delta = moran_dimension(ifs.ratios)
    H = gibbs_entropy(ifs, delta).value
    return a * nu_b / ((1 - math.exp(-delta * a)) * (H / delta))


def _lattice_period(ifs: IfsSpec) -> float:
    if not ifs.is_affine:
        raise InvalidSpecError("the renewal predictor needs a self-similar system")
    lat = lattice_classify(ifs.ratios)
    if not isinstance(lat, Lattice):
        raise InvalidSpecError(f"the renewal predictor needs a lattice system, got {lat}")
    return lat.a


def lattice_predictor(ifs: IfsSpec, nu_b: float, T: float) -> float:
    """Renewal prediction for ``e**(-delta T) * lambda0(bd F_eps cap B) / 2`` at ``eps = e**-T``.

    The prediction is periodic in ``T`` with the lattice period ``a``.
    """
    a = _lattice_period(ifs)
    delta = moran_dimension(ifs.ratios)
    coef = predictor_coefficient(ifs, nu_b)
    total = math.fsum(math.exp(-delta * a * math.ceil((math.log(2.0) - T - math.log(float(L))) / a))
                      for L in primary_gaps(ifs).lengths)
    return math.exp(-delta * T) * coef * total


def window_mass(ifs: IfsSpec, delta: float, window: Window, depth: int = 12) -> tuple:
    """Conformal measure of ``window`` as ``(value, ambiguity)``.

    Cylinders whose hull lies in the window count fully; cylinders still
    straddling an endpoint at ``depth`` make up the ambiguity.
    """
    value, amb = 0.0, 0.0
    if ifs.is_affine:
        r = [abs(float(m.ratio)) ** delta for m in ifs.maps]

        def walk(word, mass):
            nonlocal value, amb
            lo, hi = (float(v) for v in cylinder_hull(ifs, word))
            inside = any(c <= lo and hi <= d for c, d in window.intervals)
            if inside:
                value += mass
                return
            if not window.intersects(lo, hi):
                return
            if len(word) >= depth:
                amb += mass
                return
            for i in range(1, ifs.nsym + 1):
                walk(word + (i,), mass * r[i - 1])

        walk((), 1.0)
        return value, amb
    nu = conformal_measure(ifs, delta, depth)
    from .symbolic import index_word
    for k, m in enumerate(nu.masses):
        lo, hi = (float(v) for v in cylinder_hull(ifs, index_word(k, depth, ifs.nsym)))
        if any(c <= lo and hi <= d for c, d in window.intervals):
            value += m
        elif window.intersects(lo, hi):
            amb += m
    return value, amb + value * nu.rel_error


def localized_measure_estimate(ifs: IfsSpec, window: Window, T: float,
                               cutoff: float | None = None) -> tuple:
    """Localized average content over ``window`` and its predicted value ``mass1 * nu(B)``."""
    cutoff = cutoff if cutoff is not None else T
    const = theoretical_constants(ifs)
    prof = localized_profile(ifs, cutoff, window)
    est = average_content(prof, const.delta, T)
    nu_b, _ = window_mass(ifs, const.delta, window)
    return est, const.mass1 * nu_b
