"""Gap enumeration and exact parallel-set geometry.

For a compact set ``F`` with convex hull ``H`` and complementary gaps of
lengths ``l_j``, the parallel set ``F_eps`` satisfies

    lambda1(F_eps) = |H| + 2 eps - sum_{l_j > 2 eps} (l_j - 2 eps)
    lambda0(bd F_eps) = 2 (1 + #{l_j > 2 eps})

so both are exact once every gap longer than ``2 eps`` is known.  A
:class:`VolumeProfile` stores the gaps above a cutoff together with their
total residual length, which makes it valid for ``eps >= cutoff / 2``.
"""
from __future__ import annotations

import bisect
import csv
import heapq
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, ClearanceError, IntervalRegimeError, RangeError
from .symbolic import IfsSpec, compose_eval, index_word, primary_gaps

DEFAULT_MAX_GAPS = 50_000_000


@dataclass(frozen=True)
class GapInterval:
    """The open gap ``phi_word(L^index)``."""

    word: tuple
    index: int
    left: float
    right: float

    @property
    def length(self):
        return self.right - self.left


@dataclass(frozen=True)
class Window:
    """A finite union of closed intervals (endpoints may be infinite)."""

    intervals: tuple

    @classmethod
    def half_line(cls, b) -> "Window":
        return cls(((-math.inf, b),))

    def intersects(self, lo, hi) -> bool:
        return any(lo <= d and hi >= c for c, d in self.intervals)


@dataclass
class GapLedger:
    """All gaps of length at least ``cutoff`` (meeting ``window``, if given).

    Words are stored compactly as ``(depth, index)`` pairs; iterate or index
    the ledger to obtain :class:`GapInterval` records.  Rows are sorted by
    decreasing length.
    """

    cutoff: float
    hull: tuple
    nsym: int
    depths: np.ndarray
    words: np.ndarray
    indices: np.ndarray
    lefts: object
    rights: object
    lengths: object
    complete: bool = True
    window: Window | None = None

    def __len__(self):
        return len(self.depths)

    def __getitem__(self, k) -> GapInterval:
        word = index_word(int(self.words[k]), int(self.depths[k]), self.nsym)
        return GapInterval(word, int(self.indices[k]) + 1, self.lefts[k], self.rights[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def to_csv(self, fh=None) -> str | None:
        """Write ``word,index,left,right,length`` rows (17 significant digits)."""
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "index", "left", "right", "length"])
        for k, g in enumerate(self):
            w.writerow([".".join(map(str, g.word)), g.index, _fmt(g.left), _fmt(g.right),
                        _fmt(self.lengths[k])])
        return buf.getvalue() if fh is None else None


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return format(float(v), ".17g")


def _sort_desc(cols, key):
    order = np.argsort(-np.asarray([float(k) for k in key]), kind="stable")
    return [c[order] if isinstance(c, np.ndarray) else [c[i] for i in order] for c in cols]


def enumerate_gaps(ifs: IfsSpec, cutoff, window: Window | None = None,
                   max_gaps: int = DEFAULT_MAX_GAPS) -> GapLedger:
    """Every gap ``phi_w(L^i)`` of length at least ``cutoff``.

    Cylinders are expanded only while their hull diameter is at least
    ``cutoff`` (a smaller cylinder contains no such gap).  With a window, only
    cylinders meeting the window are expanded and only gaps meeting it are
    kept.  Float affine systems are expanded level by level with numpy; other
    systems (rational parameters or nonlinear maps) use a best-first frontier
    ordered by cylinder diameter.

    Raises
    ------
    BudgetExceededError
        When more than ``max_gaps`` gaps qualify; ``partial`` holds the gaps
        found so far.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    fam = primary_gaps(ifs)
    if ifs.is_affine and not ifs.is_exact:
        return _enumerate_affine_vectorized(ifs, float(cutoff), fam, window, max_gaps)
    return _enumerate_best_first(ifs, cutoff, fam, window, max_gaps)


def _enumerate_affine_vectorized(ifs, cutoff, fam, window, max_gaps) -> GapLedger:
    m0, m1 = (float(v) for v in ifs.hull)
    width = m1 - m0
    r = np.array([float(m.ratio) for m in ifs.maps])
    b = np.array([float(m.offset) for m in ifs.maps])
    glo = np.array([float(lo) for lo, _ in fam.gaps])
    ghi = np.array([float(hi) for _, hi in fam.gaps])
    glen = np.array([float(L) for L in fam.lengths])
    N, Q = ifs.nsym, len(glo)
    A = np.ones(1)
    B = np.zeros(1)
    idx = np.zeros(1, dtype=np.int64)
    out = {k: [] for k in ("depth", "word", "index", "left", "right", "length")}
    total, depth, complete = 0, 0, True
    while len(A):
        absA = np.abs(A)
        for j in range(Q):
            length = absA * glen[j]
            keep = length >= cutoff
            if not keep.any():
                continue
            u = A[keep] * glo[j] + B[keep]
            v = A[keep] * ghi[j] + B[keep]
            left, right = np.minimum(u, v), np.maximum(u, v)
            sel = np.ones(len(left), dtype=bool)
            if window is not None:
                sel = np.zeros(len(left), dtype=bool)
                for c, d in window.intervals:
                    sel |= (left <= d) & (right >= c)
            n_new = int(sel.sum())
            out["depth"].append(np.full(n_new, depth, dtype=np.int64))
            out["word"].append(idx[keep][sel])
            out["index"].append(np.full(n_new, j, dtype=np.int64))
            out["left"].append(left[sel])
            out["right"].append(right[sel])
            out["length"].append(length[keep][sel])
            total += n_new
        if total > max_gaps:
            complete = False
            break
        # children phi_w o phi_i
        A2 = (A[None, :] * r[:, None])
        B2 = (A[None, :] * b[:, None] + B[None, :])
        I2 = idx[None, :] * N + np.arange(N, dtype=np.int64)[:, None]
        A2, B2, I2 = A2.ravel(), B2.ravel(), I2.ravel()
        keep = np.abs(A2) * width >= cutoff
        if window is not None and keep.any():
            u, v = A2 * m0 + B2, A2 * m1 + B2
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            inside = np.zeros(len(A2), dtype=bool)
            for c, d in window.intervals:
                inside |= (lo <= d) & (hi >= c)
            keep &= inside
        A, B, idx = A2[keep], B2[keep], I2[keep]
        depth += 1
    cols = [np.concatenate(out[k]) if out[k] else np.zeros(0) for k in out]
    cols = _sort_desc(cols, cols[5])
    ledger = GapLedger(cutoff, ifs.hull, N, cols[0].astype(np.int64), cols[1].astype(np.int64),
                       cols[2].astype(np.int64), cols[3], cols[4], cols[5], complete, window)
    if not complete:
        raise BudgetExceededError(f"more than {max_gaps} gaps above cutoff {cutoff}", ledger)
    return ledger


def _enumerate_best_first(ifs, cutoff, fam, window, max_gaps) -> GapLedger:
    N = ifs.nsym
    counter = itertools.count()
    hull = ifs.hull
    affine = ifs.is_affine
    one = Fraction(1) if ifs.is_exact else 1.0

    def node(word, A, B):
        if affine:
            u, v = A * hull[0] + B, A * hull[1] + B
        else:
            u, v = (compose_eval(ifs, word, x) for x in hull)
        lo, hi = (u, v) if u <= v else (v, u)
        return (-(hi - lo), next(counter), word, A, B, lo, hi)

    frontier = [node((), one, one * 0)]
    depth, words, indices, lefts, rights, lengths = [], [], [], [], [], []
    while frontier:
        neg, _, word, A, B, lo, hi = heapq.heappop(frontier)
        if -neg < cutoff:
            break
        if window is not None and not window.intersects(lo, hi):
            continue
        for j, (p, q) in enumerate(fam.gaps):
            if affine:
                u, v = A * p + B, A * q + B
            else:
                u, v = compose_eval(ifs, word, p), compose_eval(ifs, word, q)
            left, right = (u, v) if u <= v else (v, u)
            if right - left < cutoff:
                continue
            if window is not None and not window.intersects(left, right):
                continue
            depth.append(len(word))
            words.append(_word_idx(word, N))
            indices.append(j)
            lefts.append(left)
            rights.append(right)
            lengths.append(right - left)
        if len(depth) > max_gaps:
            break
        for i, m in enumerate(ifs.maps, 1):
            if affine:
                child = node(word + (i,), A * m.ratio, A * m.offset + B)
            else:
                child = node(word + (i,), None, None)
            if -child[0] >= cutoff:
                heapq.heappush(frontier, child)
    cols = _sort_desc([np.array(depth, dtype=np.int64), np.array(words, dtype=object),
                       np.array(indices, dtype=np.int64), lefts, rights, lengths], lengths)
    complete = len(depth) <= max_gaps
    ledger = GapLedger(cutoff, hull, N, cols[0], cols[1], cols[2], cols[3], cols[4], cols[5],
                       complete, window)
    if not complete:
        raise BudgetExceededError(f"more than {max_gaps} gaps above cutoff {cutoff}", ledger)
    return ledger


def _word_idx(word, N):
    k = 0
    for s in word:
        k = k * N + s - 1
    return k


@dataclass
class VolumeProfile:
    """Exact ``eps -> lambda1(F_eps)`` and ``eps -> lambda0(bd F_eps)``.

    Parameters
    ----------
    hull_length : float
        Total length of the hulls of the pieces.
    lengths : array or list
        Distinct-or-repeated gap lengths above the cutoff, decreasing.
    counts : array
        Multiplicity of each entry of ``lengths``.
    cutoff : float
        Every gap of length ``>= cutoff`` is listed.
    residual : float
        Total length of the unlisted gaps (hull length minus listed lengths).
    components : int
        Number of separate pieces (1 for a global profile).
    max_eps : float
        Upper end of the validity range (window clearance for localized profiles).
    """

    hull_length: object
    lengths: object
    counts: object
    cutoff: object
    residual: object
    components: int = 1
    max_eps: float = math.inf
    exact: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.exact:
            self.lengths = list(self.lengths)
            self.counts = [int(c) for c in self.counts]
            self._neg = [-v for v in self.lengths]
            self._cnt = [0] + list(itertools.accumulate(self.counts))
            tail = list(itertools.accumulate(c * v for c, v in zip(reversed(self.counts), reversed(self.lengths))))
            self._suffix = list(reversed(tail)) + [Fraction(0)]
        else:
            self.lengths = np.asarray(self.lengths, dtype=float)
            self.counts = np.asarray(self.counts, dtype=float)
            self._neg = -self.lengths
            self._cnt = np.concatenate([[0.0], np.cumsum(self.counts)])
            tail = np.cumsum((self.counts * self.lengths)[::-1])[::-1]
            self._suffix = np.concatenate([tail, [0.0]])

    @property
    def min_eps(self):
        return self.cutoff / 2

    def _k(self, eps) -> int:
        """Number of list entries with length strictly above ``2 eps``."""
        if self.exact:
            return bisect.bisect_left(self._neg, -2 * eps)
        return int(np.searchsorted(self._neg, -2 * eps, side="left"))

    def check(self, eps) -> None:
        if not (eps >= self.min_eps):
            raise RangeError(f"eps={eps} below the profile resolution {self.min_eps}")
        if not (eps < self.max_eps):
            raise RangeError(f"eps={eps} not below the window clearance {self.max_eps}")

    def coefficients(self, k: int):
        """``(A, B)`` with ``lambda1 = A + B eps`` while exactly ``k`` entries stay open."""
        return (self.residual + self._suffix[k], 2 * (self.components + self._cnt[k]))

    def breakpoints(self):
        """Distinct values ``l / 2`` where the profile changes slope."""
        if self.exact:
            return sorted({v / 2 for v in self.lengths})
        return np.unique(self.lengths / 2)

    def volume(self, eps):
        self.check(eps)
        a, b = self.coefficients(self._k(eps))
        return a + b * eps

    def count(self, eps) -> int:
        self.check(eps)
        return int(round(2 * (self.components + self._cnt[self._k(eps)])))

    def volume_many(self, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if eps.size and (eps.min() < float(self.min_eps) or eps.max() >= self.max_eps):
            raise RangeError("scan range outside the profile validity range")
        neg = np.asarray(self._neg, dtype=float)
        k = np.searchsorted(neg, -2 * eps, side="left")
        suf = np.asarray(self._suffix, dtype=float)
        cnt = np.asarray(self._cnt, dtype=float)
        return float(self.residual) + suf[k] + 2 * (self.components + cnt[k]) * eps

    def count_many(self, eps: np.ndarray) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if eps.size and (eps.min() < float(self.min_eps) or eps.max() >= self.max_eps):
            raise RangeError("scan range outside the profile validity range")
        neg = np.asarray(self._neg, dtype=float)
        k = np.searchsorted(neg, -2 * eps, side="left")
        return 2 * (self.components + np.asarray(self._cnt, dtype=float)[k])


def profile_from_ledger(ledger: GapLedger) -> VolumeProfile:
    """Profile of the full attractor from a complete, unwindowed ledger."""
    if ledger.window is not None:
        raise ValueError("use localized_profile for windowed ledgers")
    hull_len = ledger.hull[1] - ledger.hull[0]
    exact = isinstance(hull_len, Fraction)
    if exact:
        residual = hull_len - sum(ledger.lengths, Fraction(0))
    else:
        residual = math.fsum([float(hull_len)] + [-float(v) for v in ledger.lengths])
    return VolumeProfile(hull_len, ledger.lengths, np.ones(len(ledger), dtype=np.int64),
                         ledger.cutoff, residual, exact=exact)


def self_similar_profile(ifs: IfsSpec, cutoff) -> VolumeProfile:
    """Profile of a self-similar set grouped by length class.

    The gap ``phi_w(L^j)`` has length ``prod_i |r_i|**k_i * |L^j|`` where
    ``k_i`` counts symbol ``i`` in ``w``, so all words with the same symbol
    counts share one entry weighted by the multinomial coefficient.  The
    residual is accumulated from positive terms (frontier cylinder hulls and
    short gaps of expanded cylinders), so it stays accurate even when it is
    far below the hull length.
    """
    fam = primary_gaps(ifs)
    exact = ifs.is_exact
    r = [abs(m.ratio) for m in ifs.maps]
    if not exact:
        r = [float(v) for v in r]
    base = [L if exact else float(L) for L in fam.lengths]
    hull_len = ifs.hull[1] - ifs.hull[0]
    if not exact:
        hull_len = float(hull_len)
    lmax = max(base)
    N = len(r)
    lengths, counts, resid = [], [], []

    def multinomial(ks):
        c = math.factorial(sum(ks))
        for k in ks:
            c //= math.factorial(k)
        return c

    def rec(i, scale, ks):
        if i == N:
            if scale * lmax < cutoff:
                return
            c = multinomial(ks)
            for L in base:
                if scale * L >= cutoff:
                    lengths.append(scale * L)
                    counts.append(c)
                else:
                    resid.append(c * (scale * L))
            for j in range(N):
                if scale * r[j] * lmax < cutoff:
                    # unexpanded children: whole hulls of the next level
                    resid.append(c * (scale * r[j] * hull_len))
            return
        s = scale
        k = 0
        while s * lmax >= cutoff:
            rec(i + 1, s, ks + [k])
            s = s * r[i]
            k += 1

    rec(0, Fraction(1) if exact else 1.0, [])
    order = sorted(range(len(lengths)), key=lambda k: -lengths[k])
    lengths = [lengths[k] for k in order]
    counts = [counts[k] for k in order]
    residual = sum(resid, Fraction(0)) if exact else math.fsum(resid)
    return VolumeProfile(hull_len, lengths, counts, cutoff, residual, exact=exact)


def attractor_profile(ifs: IfsSpec, cutoff, max_gaps: int = DEFAULT_MAX_GAPS) -> VolumeProfile:
    """Best available profile: length classes for similarities, else enumeration.

    When the attractor is an interval the profile has no gaps, so that
    ``lambda1 = |hull| + 2 eps`` and ``lambda0 = 2``.
    """
    try:
        primary_gaps(ifs)
    except IntervalRegimeError:
        return interval_profile(ifs.hull)
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "profile"):
        return sym.profile(cutoff)
    if ifs.is_affine:
        return self_similar_profile(ifs, cutoff)
    return profile_from_ledger(enumerate_gaps(ifs, cutoff, max_gaps=max_gaps))


def interval_profile(hull) -> VolumeProfile:
    """Profile of a single interval (valid for every ``eps > 0``)."""
    length = hull[1] - hull[0]
    exact = isinstance(length, Fraction)
    return VolumeProfile(length, [], [], 0 if exact else 0.0, length, exact=exact)


def parallel_volume(profile: VolumeProfile, eps):
    """``lambda1(F_eps)``; valid for ``cutoff / 2 <= eps`` (and below the clearance)."""
    return profile.volume(eps)


def boundary_count(profile: VolumeProfile, eps) -> int:
    """``lambda0(bd F_eps)``, the number of boundary points of the parallel set."""
    return profile.count(eps)


def _find_gap(ledger: GapLedger, x):
    for k in range(len(ledger)):
        if ledger.lefts[k] < x < ledger.rights[k]:
            return ledger.lefts[k], ledger.rights[k]
    return None


def localized_profile(ifs: IfsSpec, cutoff, window: Window,
                      max_gaps: int = DEFAULT_MAX_GAPS) -> VolumeProfile:
    """Profile of ``F_eps`` intersected with ``window``.

    Each window interval ``[c, d]`` is trimmed to the hull of the attractor
    inside it; a finite endpoint must sit in a listed gap or outside the
    hull.  The distance from the endpoints to ``F`` is the clearance: below
    it, ``F_eps`` meets the window exactly in the parallel set of the trimmed
    pieces, which is what the returned profile describes.

    Raises
    ------
    ClearanceError
        If an endpoint lies within ``cutoff`` of the attractor.
    """
    if ifs.is_affine:
        return _localized_self_similar(ifs, cutoff, window)
    ledger = enumerate_gaps(ifs, cutoff, window=window, max_gaps=max_gaps)
    h0, h1 = ledger.hull
    exact = ifs.is_exact
    clearance = math.inf
    pieces = []

    def endpoint(x, left_end: bool):
        nonlocal clearance
        if x <= h0:
            clearance = min(clearance, h0 - x)
            return h0 if left_end else None
        if x >= h1:
            clearance = min(clearance, x - h1)
            return None if left_end else h1
        g = _find_gap(ledger, x)
        if g is None:
            raise ClearanceError(f"window endpoint {x} is not inside a gap of length >= {cutoff}")
        dist = min(x - g[0], g[1] - x)
        if dist <= cutoff:
            raise ClearanceError(f"window endpoint {x} lies within {cutoff} of the attractor")
        clearance = min(clearance, dist)
        return g[1] if left_end else g[0]

    for c, d in window.intervals:
        lo = endpoint(c, True) if c != -math.inf else h0
        hi = endpoint(d, False) if d != math.inf else h1
        if lo is None or hi is None or lo > hi:
            continue
        pieces.append((lo, hi))
    lengths, hull_len, resid = [], [], []
    for lo, hi in pieces:
        if exact:
            inside = [ledger.lengths[k] for k in range(len(ledger))
                      if ledger.lefts[k] >= lo and ledger.rights[k] <= hi]
        else:
            sel = (np.asarray(ledger.lefts) >= lo) & (np.asarray(ledger.rights) <= hi)
            inside = list(np.asarray(ledger.lengths)[sel])
        lengths.extend(inside)
        hull_len.append(hi - lo)
        if exact:
            resid.append((hi - lo) - sum(inside, Fraction(0)))
        else:
            resid.append(math.fsum([float(hi - lo)] + [-float(v) for v in inside]))
    lengths.sort(reverse=True)
    total = sum(hull_len, Fraction(0)) if exact else math.fsum(hull_len)
    residual = sum(resid, Fraction(0)) if exact else math.fsum(resid)
    return VolumeProfile(total, lengths, [1] * len(lengths), cutoff, residual,
                         components=len(pieces), max_eps=clearance, exact=exact)


def _localized_self_similar(ifs: IfsSpec, cutoff, window: Window) -> VolumeProfile:
    """Localized profile of an affine system from maximal cylinders in the window.

    Each window interval meets ``F`` in a finite union of cylinders
    ``phi_k(F)`` once its endpoints sit in gaps; every such cylinder
    contributes a rescaled length-class profile, and consecutive cylinders
    are separated by gaps of ``F``.
    """
    exact = ifs.is_exact
    primary_gaps(ifs)
    h0, h1 = ifs.hull
    clearance = math.inf
    lengths, counts, hull_len, resid, ncomp = [], [], [], [], 0
    base = self_similar_profile(ifs, cutoff)
    for c, d in window.intervals:
        found = []  # (lo, hi, |ratio|)

        def walk(A, B, word):
            nonlocal clearance
            u, v = A * h0 + B, A * h1 + B
            lo, hi = (u, v) if u <= v else (v, u)
            if hi < c or lo > d:
                clearance = min(clearance, c - hi if hi < c else lo - d)
                return
            if c <= lo and hi <= d:
                clearance = min(clearance, lo - c, d - hi)
                found.append((lo, hi, abs(A)))
                return
            if hi - lo < cutoff:
                raise ClearanceError(f"window endpoint within {cutoff} of the attractor")
            for m in ifs.maps:
                walk(A * m.ratio, A * m.offset + B, word + 1)

        one = Fraction(1) if exact else 1.0
        walk(one, one * 0, 0)
        if not found:
            continue
        found.sort()
        if clearance <= cutoff:
            raise ClearanceError(f"window endpoint within {cutoff} of the attractor")
        ncomp += 1
        lo, hi = found[0][0], found[-1][1]
        hull_len.append(hi - lo)
        piece_len, piece_cnt = [], []
        for (_, b1, _), (a2, _, _) in zip(found, found[1:]):
            if a2 > b1:
                piece_len.append(a2 - b1)
                piece_cnt.append(1)
        for _, _, s in found:
            sub = self_similar_profile(ifs, cutoff / s) if s < 1 else base
            piece_len.extend(s * v for v in sub.lengths)
            piece_cnt.extend(int(k) for k in sub.counts)
            resid.append(s * sub.residual)
        lengths.extend(piece_len)
        counts.extend(piece_cnt)
    order = sorted(range(len(lengths)), key=lambda k: -lengths[k])
    lengths = [lengths[k] for k in order]
    counts = [counts[k] for k in order]
    total = sum(hull_len, Fraction(0)) if exact else math.fsum(hull_len)
    residual = sum(resid, Fraction(0)) if exact else math.fsum(resid)
    return VolumeProfile(total, lengths, counts, cutoff, residual,
                         components=ncomp, max_eps=clearance, exact=exact)
