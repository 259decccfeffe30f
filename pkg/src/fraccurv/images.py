"""Sets obtained by straightening a lattice self-similar set along its staircase.

Let ``K`` be a lattice self-similar set in ``[0, 1]`` (containing 0 and 1)
with dimension ``delta``, lattice period ``a`` and devil's staircase
``S`` (the distribution function of its normalized Hausdorff measure).
For an integer level ``n`` put ``E = exp(delta * a * n)`` and

    w(v) = (v (E - 1) + 1) ** (-1 / delta),
    g(x) = 1 + int_0^x w(S(r)) dr     (g(x) = x + 1 for x <= 0).

``F = g(K)`` is invariant under the nonlinear system ``g o R_i o g^-1``.
The factor ``w(S)`` is piecewise constant on the gaps of ``K`` and every
cylinder integral has a convergent Taylor expansion in the cylinder mass,
which lets all quantities in this module be evaluated to near machine
precision with explicit error bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidSpecError
from .gaps import GapLedger, VolumeProfile
from .symbolic import IfsSpec, Lattice, lattice_classify
from .thermo import moran_dimension

_TAYLOR_TERMS = 64
_Q_MAX = 0.5
_LOG_SLACK = 1e-15


class StaircaseCdf:
    """Devil's staircase of a self-similar set with hull ``[0, 1]``.

    Parameters
    ----------
    base : IfsSpec
        Affine system with positive ratios whose attractor has hull ``[0, 1]``.
    """

    def __init__(self, base: IfsSpec):
        if not base.is_affine or any(float(m.ratio) <= 0 for m in base.maps):
            raise InvalidSpecError("staircase needs an orientation-preserving affine system")
        if float(base.hull[0]) != 0.0 or float(base.hull[1]) != 1.0:
            raise InvalidSpecError("staircase needs an attractor with hull [0, 1]")
        self.base = base
        self.delta = moran_dimension(base.ratios)
        self.r = np.array([float(m.ratio) for m in base.maps])
        self.b = np.array([float(m.offset) for m in base.maps])
        self.p = self.r**self.delta
        self.p = self.p / math.fsum(self.p)
        self.order = [int(i) for i in np.argsort(self.b)]
        left = np.zeros(base.nsym)
        acc = 0.0
        for i in self.order:
            left[i] = acc
            acc += self.p[i]
        self.P = left
        # primary gaps between consecutive cylinders, left to right
        self.gap_lo, self.gap_hi, self.gap_val = [], [], []
        for i, j in zip(self.order, self.order[1:]):
            lo, hi = self.b[i] + self.r[i], self.b[j]
            if hi > lo:
                self.gap_lo.append(lo)
                self.gap_hi.append(hi)
                self.gap_val.append(self.P[i] + self.p[i])
        self.gap_lo = np.array(self.gap_lo)
        self.gap_hi = np.array(self.gap_hi)
        self.gap_len = self.gap_hi - self.gap_lo
        self.gap_val = np.array(self.gap_val)

    def eval(self, x: float, tol: float = 0.0) -> tuple:
        """``(S(x), error)``; exact on gaps and at cylinder endpoints."""
        if x <= 0:
            return 0.0, 0.0
        if x >= 1:
            return 1.0, 0.0
        A, B, G, p = 1.0, 0.0, 0.0, 1.0
        while True:
            for i in self.order:
                lo = B + A * self.b[i]
                hi = lo + A * self.r[i]
                if x <= lo:
                    return G + p * self.P[i], 0.0
                if x < hi:
                    A, B, G, p = A * self.r[i], lo, G + p * self.P[i], p * self.p[i]
                    break
                if x == hi:
                    return G + p * (self.P[i] + self.p[i]), 0.0
            else:
                return G + p, 0.0
            if p <= tol or A < 1e-300 or hi - lo <= 4 * math.ulp(x):
                return G + p / 2, p / 2


def staircase_eval(cdf: StaircaseCdf, x: float, tol: float = 0.0) -> tuple:
    """Value of the staircase at ``x`` with an error bound."""
    return cdf.eval(x, tol)


def _binom_series(alpha: float, K: int) -> np.ndarray:
    c = np.empty(K)
    c[0] = 1.0
    for k in range(1, K):
        c[k] = c[k - 1] * (alpha - k + 1) / k
    return c


class GnMap:
    """The straightening map ``g`` at a given level, with cylinder integrals.

    Parameters
    ----------
    base : IfsSpec
        Lattice self-similar system with positive ratios and hull ``[0, 1]``.
    level : int
        Nonnegative level ``n``; level 0 gives the translation ``x + 1``.
    """

    def __init__(self, base: IfsSpec, level: int):
        if level < 0:
            raise ValueError("level must be nonnegative")
        self.cdf = StaircaseCdf(base)
        lat = lattice_classify(base.ratios)
        if not isinstance(lat, Lattice):
            raise InvalidSpecError("staircase images need a lattice base system")
        self.base = base
        self.level = level
        self.a = lat.a
        self.delta = self.cdf.delta
        self.em1 = math.expm1(self.delta * self.a * level)
        self.E = self.em1 + 1.0
        self._alpha = -1.0 / self.delta
        self._coef = _binom_series(self._alpha, _TAYLOR_TERMS)
        self._m = self._moments(_TAYLOR_TERMS)
        self._memo = {}

    # -- closed forms ---------------------------------------------------
    def w(self, v):
        """Derivative of ``g`` where the staircase takes the value ``v``."""
        return (np.asarray(v) * self.em1 + 1.0) ** self._alpha

    def psi(self, v):
        """``-ln w(v)``; takes values in ``[0, a n]``."""
        return np.log1p(np.asarray(v) * self.em1) / self.delta

    @property
    def entropy(self) -> float:
        c = self.cdf
        return -self.delta * math.fsum(c.p * np.log(c.r))

    @property
    def hoelder_constant(self) -> float:
        """Hoelder-``delta`` constant of the staircase on ``[0, 1]``."""
        return 2.0 + 1.0 / float(self.cdf.r.min())

    def _moments(self, K: int) -> np.ndarray:
        """``m_k = int_0^1 S(s)**k ds`` from the self-similarity recursion."""
        c = self.cdf
        m = np.zeros(K)
        m[0] = 1.0
        for k in range(1, K):
            rhs = math.fsum(c.gap_len * c.gap_val**k)
            for i in range(len(c.r)):
                terms = [math.comb(k, j) * c.P[i] ** (k - j) * c.p[i] ** j * m[j] for j in range(k)]
                rhs += c.r[i] * math.fsum(terms)
            m[k] = rhs / (1.0 - math.fsum(c.r * c.p**k))
        return m

    def _phi(self, G, p):
        """``int_0^1 w(G + p S(s)) ds`` by Taylor expansion; returns ``(value, error)``.

        Requires ``q = p (E-1) / (G (E-1) + 1) <= 1/2``; the tail is bounded by
        a geometric series since ``m_k`` decreases and the binomial ratios
        are at most ``(k + 1/delta) / (k + 1)``.
        """
        G = np.asarray(G, dtype=float)
        p = np.asarray(p, dtype=float)
        base = G * self.em1 + 1.0
        q = p * self.em1 / base
        qk = q[..., None] ** np.arange(_TAYLOR_TERMS)
        terms = self._coef * qk * self._m
        val = base**self._alpha * terms.sum(axis=-1)
        K = _TAYLOR_TERMS
        rho = q * (K - self._alpha) / (K + 1)
        tail = base**self._alpha * np.abs(terms[..., -1]) * rho / (1 - rho)
        return val, tail + 4e-16 * np.abs(val)

    def node_integral(self, word: tuple = ()) -> tuple:
        """``(int over the base cylinder hull of w(S), error)`` for ``word``."""
        hit = self._memo.get(word)
        if hit is not None:
            return hit
        A, G, p = self._cyl(word)
        base = G * self.em1 + 1.0
        if p * self.em1 <= _Q_MAX * base:
            v, e = self._phi(G, p)
            res = (A * float(v), A * float(e))
        else:
            parts, errs = [], []
            c = self.cdf
            for i in range(self.base.nsym):
                v, e = self.node_integral(word + (i + 1,))
                parts.append(v)
                errs.append(e)
            parts.extend(A * c.gap_len * self.w(G + p * c.gap_val))
            res = (math.fsum(parts), math.fsum(errs))
        self._memo[word] = res
        return res

    def _cyl(self, word: tuple):
        """``(ratio, mass offset G, mass p)`` of a base cylinder."""
        c = self.cdf
        A, G, p = 1.0, 0.0, 1.0
        for s in word:
            i = s - 1
            G = G + p * c.P[i]
            p = p * c.p[i]
            A = A * c.r[i]
        return A, G, p

    @cached_property
    def hull_length(self) -> float:
        return self.node_integral(())[0]

    # -- evaluation -----------------------------------------------------
    def g(self, x: float, tol: float = 1e-16) -> tuple:
        """``(g(x), error)``."""
        if x <= 0:
            return x + 1.0, 0.0
        total, err0 = self.node_integral(())
        if x >= 1:
            return 1.0 + total + (x - 1.0) * float(self.w(1.0)), err0
        c = self.cdf
        acc, err = [1.0], [0.0]
        word, B, A, G, p = (), 0.0, 1.0, 0.0, 1.0
        while True:
            hit = None
            prev_end = B
            for i in c.order:
                lo = B + A * c.b[i]
                hi = lo + A * c.r[i]
                if lo > prev_end:
                    # gap between the previous cylinder (or node start) and cylinder i
                    wv = float(self.w(G + p * c.P[i]))
                    if x <= lo:
                        acc.append(wv * (x - prev_end))
                        return math.fsum(acc), math.fsum(err)
                    acc.append(wv * (lo - prev_end))
                if x < hi:
                    hit = (i, lo)
                    break
                v, e = self.node_integral(word + (i + 1,))
                acc.append(v)
                err.append(e)
                if x == hi:
                    return math.fsum(acc), math.fsum(err)
                prev_end = hi
            if hit is None:
                return math.fsum(acc), math.fsum(err)
            i, lo = hit
            word = word + (i + 1,)
            G, p, A, B = G + p * c.P[i], p * c.p[i], A * c.r[i], lo
            if A * float(self.w(G)) <= tol or A <= 4 * math.ulp(x):
                # remaining partial cylinder [B, x]: w lies in [w(G+p), w(G)]
                lo_v = float(self.w(G + p)) * (x - B)
                hi_v = float(self.w(G)) * (x - B)
                acc.append(0.5 * (lo_v + hi_v))
                err.append(0.5 * (hi_v - lo_v))
                return math.fsum(acc), math.fsum(err)

    def g_inv(self, y: float, tol: float = 1e-16) -> tuple:
        """``(x, error)`` with ``g(x) = y``."""
        if y <= 1.0:
            return y - 1.0, 0.0
        total, _ = self.node_integral(())
        if y >= 1.0 + total:
            return 1.0 + (y - 1.0 - total) / float(self.w(1.0)), 0.0
        c = self.cdf
        word, B, A, G, p = (), 0.0, 1.0, 0.0, 1.0
        rem = y - 1.0
        while True:
            prev_end = B
            descended = False
            for k, i in enumerate(c.order):
                lo = B + A * c.b[i]
                if lo > prev_end:
                    wv = float(self.w(G + p * c.P[i]))
                    span = wv * (lo - prev_end)
                    if rem < span:
                        return prev_end + rem / wv, 0.0
                    rem -= span
                v, _ = self.node_integral(word + (i + 1,))
                if rem <= v:
                    word = word + (i + 1,)
                    G, p, A, B = G + p * c.P[i], p * c.p[i], A * c.r[i], lo
                    descended = True
                    break
                rem -= v
                prev_end = lo + A * c.r[i]
            if not descended:
                return prev_end, 0.0
            if A <= tol or A <= 4 * math.ulp(max(B, 1e-300)):
                return B + A / 2, A / 2

    # -- tables used by the thermodynamic and curvature modules ---------
    def cylinder_tables(self, m: int) -> tuple:
        """``(G, p)`` arrays over words of length ``m`` (first symbol most significant)."""
        c = self.cdf
        G = np.zeros(1)
        p = np.ones(1)
        for _ in range(m):
            G = (c.P[:, None] + c.p[:, None] * G[None, :]).ravel()
            p = (c.p[:, None] * p[None, :]).ravel()
        return G, p

    def rep_derivatives(self, m: int) -> np.ndarray:
        """``|phi_i'|`` at the images of the base points ``R_w(0)``."""
        c = self.cdf
        G, _ = self.cylinder_tables(m)
        Gi = c.P[:, None] + c.p[:, None] * G[None, :]
        return c.r[:, None] * self.w(Gi) / self.w(G)[None, :]

    def word_log_derivative_ranges(self, n: int) -> tuple:
        """Exact enclosure of ``ln|phi_w'|`` over the hull for words of length ``n``.

        ``phi_w'(g(x)) = r_w w(G_w + p_w v) / w(v)`` with ``v = S(x)`` in
        ``[0, 1]``, and this is increasing in ``v``.
        """
        c = self.cdf
        G, p = self.cylinder_tables(n)
        logr = np.zeros(1)
        for _ in range(n):
            logr = (np.log(c.r)[:, None] + logr[None, :]).ravel()
        lo = logr - np.log1p(G * self.em1) / self.delta
        hi = logr - (np.log1p((G + p) * self.em1) - math.log(self.E)) / self.delta
        return lo - _LOG_SLACK, hi + _LOG_SLACK

    def main_gap_lengths(self, n: int) -> np.ndarray:
        """Lengths of the images of all main gaps of depth ``n``."""
        c = self.cdf
        G, p = self.cylinder_tables(n)
        A = np.ones(1)
        for _ in range(n):
            A = (c.r[:, None] * A[None, :]).ravel()
        vals = G[:, None] + p[:, None] * c.gap_val[None, :]
        return (A[:, None] * c.gap_len[None, :] * self.w(vals)).ravel()

    def distortion(self, n: int) -> float:
        """Distortion constant from the closed form of the derivatives.

        For ``x, y`` in a depth-``n`` cylinder the staircase values differ by
        at most ``max p_w``, and ``|d/dv ln w| <= (E - 1) / delta``.
        """
        pmax = float(self.cdf.p.max())
        return math.exp(self.em1 * (1 + pmax) / self.delta * pmax**n)

    def _pieces(self, cutoff: float):
        """Gap images and leaf integrals covering the base hull.

        Returns arrays describing every main gap of an expanded cylinder
        (base position, image length, word, index) and the integrals of the
        unexpanded cylinders, each tagged with its base left end.
        """
        c, N = self.cdf, self.base.nsym
        A = np.ones(1)
        B = np.zeros(1)
        G = np.zeros(1)
        p = np.ones(1)
        idx = np.zeros(1, dtype=np.int64)
        depth = 0
        gaps = {k: [] for k in ("pos", "len", "blen", "word", "depth", "index")}
        leaves_pos, leaves_val, leaves_err = [], [], []
        while len(A):
            for j in range(len(c.gap_lo)):
                gaps["pos"].append(A * c.gap_lo[j] + B)
                gaps["len"].append(A * c.gap_len[j] * self.w(G + p * c.gap_val[j]))
                gaps["blen"].append(A * c.gap_len[j])
                gaps["word"].append(idx)
                gaps["depth"].append(np.full(len(A), depth))
                gaps["index"].append(np.full(len(A), j))
            A2 = (A[None, :] * c.r[:, None]).ravel()
            B2 = (A[None, :] * c.b[:, None] + B[None, :]).ravel()
            G2 = (G[None, :] + p[None, :] * c.P[:, None]).ravel()
            p2 = (p[None, :] * c.p[:, None]).ravel()
            I2 = (idx[None, :] * N + np.arange(N)[:, None]).ravel()
            expand = A2 >= cutoff
            leaf = ~expand
            if leaf.any():
                lg, lp, la = G2[leaf], p2[leaf], A2[leaf]
                q = lp * self.em1 / (lg * self.em1 + 1.0)
                v, e = self._phi(np.minimum(lg, 1.0), np.where(q <= _Q_MAX, lp, 0.0))
                v, e = la * v, la * e
                big = np.nonzero(q > _Q_MAX)[0]
                for k in big:
                    word = _index_word(int(I2[leaf][k]), depth + 1, N)
                    v[k], e[k] = self.node_integral(word)
                leaves_pos.append(B2[leaf])
                leaves_val.append(v)
                leaves_err.append(e)
            A, B, G, p, idx = A2[expand], B2[expand], G2[expand], p2[expand], I2[expand]
            depth += 1
        cat = {k: np.concatenate(v) for k, v in gaps.items()}
        leaves = (np.concatenate(leaves_pos), np.concatenate(leaves_val), np.concatenate(leaves_err))
        return cat, leaves

    def profile(self, cutoff: float) -> VolumeProfile:
        """Volume profile of the image set (every image gap ``>= cutoff`` listed).

        Image gaps are no longer than their base gaps because ``g' <= 1``,
        so base cylinders shorter than ``cutoff`` can be left unexpanded.
        """
        gaps, (_, lv, _) = self._pieces(cutoff)
        keep = gaps["len"] >= cutoff
        lengths = np.sort(gaps["len"][keep])[::-1]
        residual = math.fsum(np.concatenate([gaps["len"][~keep], lv]))
        return VolumeProfile(self.hull_length, lengths, np.ones(len(lengths)), cutoff, residual)

    def gap_ledger(self, cutoff: float) -> GapLedger:
        """Located image gaps of length ``>= cutoff``, endpoints from cumulative integrals."""
        gaps, (lpos, lv, le) = self._pieces(cutoff)
        pos = np.concatenate([gaps["pos"], lpos])
        val = np.concatenate([gaps["len"], lv])
        err = np.concatenate([np.zeros(len(gaps["len"])), le])
        order = np.argsort(pos, kind="stable")
        start = np.empty(len(pos))
        start[order] = 1.0 + np.concatenate([[0.0], np.cumsum(val[order])[:-1]])
        del err
        ng = len(gaps["len"])
        left = start[:ng]
        keep = gaps["len"] >= cutoff
        left, length = left[keep], gaps["len"][keep]
        srt = np.argsort(-length, kind="stable")
        return GapLedger(cutoff, (1.0, 1.0 + self.hull_length), self.base.nsym,
                         gaps["depth"][keep][srt].astype(np.int64),
                         gaps["word"][keep][srt].astype(np.int64),
                         gaps["index"][keep][srt].astype(np.int64),
                         left[srt], (left + length)[srt], length[srt])

    @cached_property
    def system(self) -> IfsSpec:
        maps = tuple(StaircaseImage(self, i) for i in range(self.base.nsym))
        return IfsSpec((1.0, 1.0 + self.hull_length), maps, lattice=None,
                       hull=(1.0, 1.0 + self.hull_length), symbolic=self)

    def induced_system(self) -> IfsSpec:
        """The invariant system ``g o R_i o g^-1`` of the image set."""
        return self.system


def _index_word(idx: int, length: int, nsym: int) -> tuple:
    out = []
    for _ in range(length):
        idx, s = divmod(idx, nsym)
        out.append(s + 1)
    return tuple(reversed(out))


class StaircaseImage:
    """The map ``g o R_i o g^-1`` on the image interval."""

    is_affine = False
    orientation = 1

    def __init__(self, gn: GnMap, i: int):
        self.gn = gn
        self.i = i
        c = gn.cdf
        self.ratio = float(c.r[i])
        self.offset = float(c.b[i])
        self._P = float(c.P[i])
        self._p = float(c.p[i])
        self.level = gn.level
        self.holder_exponent = gn.delta
        self.holder_constant = gn.em1 * (1 + self._p) * gn.E * gn.hoelder_constant / gn.delta

    def __repr__(self):
        return f"StaircaseImage(level={self.level}, index={self.i + 1})"

    def eval(self, y: float) -> float:
        x, _ = self.gn.g_inv(y)
        return self.gn.g(self.ratio * x + self.offset)[0]

    def deriv_at_base(self, x: float) -> float:
        """``phi_i'(g(x))`` for a base point ``x`` in ``[0, 1]``."""
        v, _ = self.gn.cdf.eval(x)
        return self.ratio * float(self.gn.w(self._P + self._p * v)) / float(self.gn.w(v))

    def deriv(self, y: float) -> float:
        x, _ = self.gn.g_inv(y)
        return self.deriv_at_base(x)

    def _deriv_v(self, v: float) -> float:
        return self.ratio * float(self.gn.w(self._P + self._p * v)) / float(self.gn.w(v))

    def deriv_range(self, lo: float, hi: float) -> tuple:
        """Enclosure of ``|phi_i'|`` on ``[lo, hi]``; increasing in the staircase value."""
        xlo, elo = self.gn.g_inv(lo)
        xhi, ehi = self.gn.g_inv(hi)
        vlo = self.gn.cdf.eval(xlo - elo)[0]
        vhi = self.gn.cdf.eval(xhi + ehi)[0]
        vlo, vhi = max(0.0, vlo - 1e-15), min(1.0, vhi + 1e-15)
        return (self._deriv_v(vlo) * (1 - 4e-16), self._deriv_v(vhi) * (1 + 4e-16))

    def image(self, lo: float, hi: float) -> tuple:
        return (self.eval(lo), self.eval(hi))


def gn_eval(gn: GnMap, x: float, tol: float = 1e-16) -> tuple:
    """Value of ``g`` at ``x`` with an error bound."""
    return gn.g(x, tol)


def image_gap_ledger(gn: GnMap, cutoff: float) -> GapLedger:
    """Gap ledger of the image set at the given cutoff."""
    return gn.gap_ledger(cutoff)


@dataclass
class PsiDecomposition:
    """Cohomology ``xi = zeta + psi - psi o shift`` on depth-``depth`` cylinders."""

    depth: int
    period: float
    psi: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    residual: float

    @property
    def psi_range(self) -> tuple:
        return float(self.psi.min()), float(self.psi.max())


def psi_decomposition(gn: GnMap, m: int) -> PsiDecomposition:
    """Split the image potential into the base potential plus a coboundary.

    ``psi(w) = -ln g'(x_w)`` with ``x_w = R_w(0)`` depends only on the
    staircase value there, and ``zeta(w) = -ln r_{w1}`` takes values in
    ``a Z``.  The image potential ``xi`` is evaluated through the map objects.
    """
    if m < 1:
        raise ValueError("depth must be at least 1")
    c, N = gn.cdf, gn.base.nsym
    G, _ = gn.cylinder_tables(m)
    Gs, _ = gn.cylinder_tables(m - 1)
    psi = gn.psi(G)
    first = np.repeat(np.arange(N), N ** (m - 1))
    zeta = -np.log(c.r[first])
    shifted = np.tile(gn.psi(Gs), N)
    maps = gn.system.maps
    Gi = c.P[first] + c.p[first] * np.tile(Gs, N)
    xi = -np.log(c.r[first] * gn.w(Gi) / gn.w(np.tile(Gs, N)))
    # cross-check a few entries through the map objects at base points
    for k in range(0, N**m, max(1, N**m // 16)):
        i = int(first[k])
        sub = k % N ** (m - 1)
        x0 = _base_point(c, _index_word(sub, m - 1, N))
        xi_map = -math.log(maps[i].deriv_at_base(x0))
        if abs(xi_map - xi[k]) > 1e-12:
            raise AssertionError("map derivative disagrees with the closed form")
    resid = float(np.abs(xi - (zeta + psi - shifted)).max())
    return PsiDecomposition(m, gn.a, psi, zeta, xi, resid)


def _base_point(cdf: StaircaseCdf, word: tuple) -> float:
    """``R_w(0)``."""
    x = 0.0
    for s in reversed(word):
        x = cdf.r[s - 1] * x + cdf.b[s - 1]
    return x


@dataclass
class MassConditionReport:
    """Certified comparison of the two sides of the ``psi`` pushforward identity."""

    status: str
    t: np.ndarray
    lhs_lo: np.ndarray
    lhs_hi: np.ndarray
    rhs_lo: np.ndarray
    rhs_hi: np.ndarray
    max_gap: float
    max_ambiguity: float


def _bin_masses(lo, hi, mass, x, y):
    """Masses of cylinders surely inside / possibly meeting ``psi^-1 [x, y)``."""
    inside = (lo >= x) & (hi < y)
    meets = (hi >= x) & (lo < y)
    return float(mass[inside].sum()), float(mass[meets].sum())


def mass_condition_check(gn: GnMap, m: int = 12, t_grid=None,
                         ambiguity_limit: float = 0.05) -> MassConditionReport:
    """Test the measurability identity for the ``psi`` pushforward at depth ``m``.

    For ``t`` in ``[0, a)`` compare

        sum_k e^(-delta a k) nu(psi in [k a, k a + t))
        (e^(delta t) - 1) / (e^(delta a) - 1) * sum_k e^(-delta a k) nu(psi in [k a, (k+1) a))

    where ``nu`` is the base conformal measure.  Each depth-``m`` cylinder
    has a ``psi``-enclosure; cylinders straddling a bin edge make up the
    ambiguity.  Status is ``fail`` when the two enclosures are disjoint at
    some ``t``, ``pass`` when they overlap everywhere with ambiguity below
    ``ambiguity_limit``, and ``inconclusive`` otherwise.
    """
    a, d, n = gn.a, gn.delta, gn.level
    if t_grid is None:
        t_grid = np.linspace(0.0, a, 32, endpoint=False)
    t_grid = np.asarray(t_grid, dtype=float)
    G, p = gn.cylinder_tables(m)
    lo, hi = gn.psi(G), gn.psi(G + p)
    weights = np.exp(-d * a * np.arange(n + 1))
    full_lo = full_hi = 0.0
    for k in range(n + 1):
        u, v = _bin_masses(lo, hi, p, k * a, (k + 1) * a)
        full_lo += weights[k] * u
        full_hi += weights[k] * v
    L_lo, L_hi, R_lo, R_hi = (np.zeros(len(t_grid)) for _ in range(4))
    for j, t in enumerate(t_grid):
        for k in range(n + 1):
            u, v = _bin_masses(lo, hi, p, k * a, k * a + t)
            L_lo[j] += weights[k] * u
            L_hi[j] += weights[k] * v
        f = math.expm1(d * t) / math.expm1(d * a)
        R_lo[j], R_hi[j] = f * full_lo, f * full_hi
    gap = np.maximum(L_lo - R_hi, R_lo - L_hi)
    amb = float(np.max((L_hi - L_lo) + (R_hi - R_lo)))
    if np.any(gap > 1e-12):
        status = "fail"
    elif amb <= ambiguity_limit:
        status = "pass"
    else:
        status = "inconclusive"
    return MassConditionReport(status, t_grid, L_lo, L_hi, R_lo, R_hi, float(gap.max()), amb)
