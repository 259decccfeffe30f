"""Words, cylinders and certified map evaluation for interval IFS.

An iterated function system (IFS) here is a finite family of monotone
contractions on a compact interval ``X = [a, b]``.  Words are tuples of
1-based symbols; ``phi_w = phi_{w1} o ... o phi_{wn}`` is evaluated
right to left, so the empty word is the identity.

Affine maps may carry :class:`fractions.Fraction` parameters, in which case
every evaluation in this module stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Protocol, Sequence, Union

import mpmath

from .errors import IntervalRegimeError, InvalidSpecError

Word = tuple
Number = Union[float, Fraction]


def word_shift(word: Word) -> Word:
    """Drop the first symbol."""
    return tuple(word[1:])


def word_index(word: Word, nsym: int) -> int:
    """Integer index of ``word`` among words of its length (first symbol most significant)."""
    idx = 0
    for s in word:
        idx = idx * nsym + (s - 1)
    return idx


def index_word(idx: int, length: int, nsym: int) -> Word:
    """Inverse of :func:`word_index`."""
    out = []
    for _ in range(length):
        idx, s = divmod(idx, nsym)
        out.append(s + 1)
    return tuple(reversed(out))


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


class MapSpec(Protocol):
    """Contract every map family implements."""

    is_affine: bool
    orientation: int
    holder_exponent: float
    holder_constant: float

    def eval(self, x): ...

    def deriv(self, x) -> float: ...

    def deriv_range(self, lo, hi) -> tuple: ...

    def image(self, lo, hi) -> tuple: ...


@dataclass(frozen=True)
class Affine:
    """The map ``x -> ratio * x + offset``."""

    ratio: Number
    offset: Number

    is_affine = True
    holder_exponent = 1.0
    holder_constant = 0.0

    def __post_init__(self):
        if not (-1 < self.ratio < 1) or self.ratio == 0:
            raise InvalidSpecError(f"affine ratio must lie in (-1, 1) minus 0, got {self.ratio}")

    @property
    def orientation(self) -> int:
        return 1 if self.ratio > 0 else -1

    @property
    def exact(self) -> bool:
        return isinstance(self.ratio, Fraction) and isinstance(self.offset, Fraction)

    def eval(self, x):
        return self.ratio * x + self.offset

    def deriv(self, x):
        return abs(self.ratio)

    def deriv_range(self, lo, hi):
        r = abs(self.ratio)
        return (r, r)

    def image(self, lo, hi):
        u, v = self.eval(lo), self.eval(hi)
        return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Lattice:
    """Lattice type: the potential takes values in ``a * Z``."""

    a: float


@dataclass(frozen=True)
class Nonlattice:
    pass


@dataclass(frozen=True)
class Undecided:
    """Commensurability could not be settled within the denominator cap."""

    pass


@dataclass(frozen=True)
class GapFamily:
    """The primary gaps: ordered open intervals in the hull."""

    gaps: tuple

    @property
    def count(self) -> int:
        return len(self.gaps)

    @property
    def lengths(self) -> list:
        return [hi - lo for lo, hi in self.gaps]


@dataclass(frozen=True)
class DistortionBound:
    depth: int
    rho: float


@dataclass(frozen=True)
class IfsSpec:
    """A finite IFS of monotone contractions on ``domain``.

    Parameters
    ----------
    domain : tuple
        Endpoints ``(a, b)`` of the compact interval ``X``.
    maps : tuple
        Map objects following the :class:`MapSpec` contract.
    lattice : object, optional
        Declared lattice type (``Lattice``, ``Nonlattice`` or ``None`` for unknown).
    hull : tuple, optional
        Precomputed convex hull of the attractor; derived when omitted.
    symbolic : object, optional
        Family-specific helper providing closed forms (see :mod:`fraccurv.images`).
    """

    domain: tuple
    maps: tuple
    lattice: object = None
    hull: tuple | None = None
    symbolic: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(self.maps) < 2:
            raise InvalidSpecError("an IFS needs at least two maps")
        a, b = self.domain
        if not a < b:
            raise InvalidSpecError("domain must be a nondegenerate interval")
        imgs = [m.image(a, b) for m in self.maps]
        for i, (lo, hi) in enumerate(imgs, 1):
            if lo < a or hi > b:
                raise InvalidSpecError(f"map {i} does not send the domain into itself")
        order = sorted(range(len(imgs)), key=lambda i: imgs[i][0])
        for i, j in zip(order, order[1:]):
            if imgs[i][1] > imgs[j][0]:
                raise InvalidSpecError(f"open set condition fails for maps {i + 1} and {j + 1}")
        for i, m in enumerate(self.maps, 1):
            lo, hi = m.deriv_range(a, b)
            if not (0 < lo <= hi < 1):
                raise InvalidSpecError(f"map {i} is not a strict contraction on the domain")
        if self.hull is None:
            object.__setattr__(self, "hull", _compute_hull(self))

    @property
    def nsym(self) -> int:
        return len(self.maps)

    @property
    def is_affine(self) -> bool:
        return all(m.is_affine for m in self.maps)

    @property
    def is_exact(self) -> bool:
        return self.is_affine and all(m.exact for m in self.maps) and all(
            isinstance(v, Fraction) for v in self.domain)

    @property
    def ratios(self) -> list:
        if not self.is_affine:
            raise InvalidSpecError("ratios are defined only for affine systems")
        return [m.ratio for m in self.maps]

    @cached_property
    def contraction_bound(self) -> float:
        a, b = self.domain
        return max(float(m.deriv_range(a, b)[1]) for m in self.maps)

    def check_word(self, word: Word) -> None:
        for s in word:
            if not (isinstance(s, int) and 1 <= s <= self.nsym):
                raise InvalidSpecError(f"symbol {s!r} outside 1..{self.nsym}")

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other


def _compute_hull(ifs: IfsSpec) -> tuple:
    """Convex hull of the attractor.

    The hull ``[m, M]`` is the fixed point of ``[m, M] -> union hull of the
    images``.  Iterating from the domain converges geometrically; for affine
    systems the two active linear equations are then solved exactly.
    """
    lo, hi = float(ifs.domain[0]), float(ifs.domain[1])
    stable = False
    for _ in range(200):
        imgs = [m.image(lo, hi) for m in ifs.maps]
        nlo = min(u for u, _ in imgs)
        nhi = max(v for _, v in imgs)
        if nlo == lo and nhi == hi:
            stable = True
            break
        lo, hi = nlo, nhi
    if not ifs.is_affine or (stable and not ifs.is_exact):
        return (lo, hi)
    # which map and which endpoint realize each extreme
    best_lo = min((float(m.image(lo, hi)[0]), i) for i, m in enumerate(ifs.maps))[1]
    best_hi = max((float(m.image(lo, hi)[1]), i) for i, m in enumerate(ifs.maps))[1]
    ml, mh = ifs.maps[best_lo], ifs.maps[best_hi]
    # m = r_l * (m or M) + b_l ; M = r_h * (M or m) + b_h
    one = Fraction(1) if ifs.is_exact else 1.0
    zero = one * 0
    # unknown vector (m, M); rows: coefficient pairs
    row1 = (one - ml.ratio, zero) if ml.ratio > 0 else (one, -ml.ratio)
    row2 = (zero, one - mh.ratio) if mh.ratio > 0 else (-mh.ratio, one)
    det = row1[0] * row2[1] - row1[1] * row2[0]
    m_ = (ml.offset * row2[1] - row1[1] * mh.offset) / det
    M_ = (row1[0] * mh.offset - ml.offset * row2[0]) / det
    return (m_, M_)


def compose_eval(ifs: IfsSpec, word: Word, x):
    """Evaluate ``phi_word(x)`` right to left.

    Examples
    --------
    >>> from fraccurv.systems import cantor
    >>> compose_eval(cantor(), (1, 2), 0.0)
    0.2222222222222222
    """
    ifs.check_word(word)
    a, b = ifs.domain
    if not (a <= x <= b):
        raise InvalidSpecError(f"point {x} outside the domain [{a}, {b}]")
    for s in reversed(word):
        x = ifs.maps[s - 1].eval(x)
    return x


def cylinder_hull(ifs: IfsSpec, word: Word) -> tuple:
    """Convex hull of ``phi_word(F)``."""
    ifs.check_word(word)
    lo, hi = ifs.hull
    for s in reversed(word):
        lo, hi = ifs.maps[s - 1].image(lo, hi)
    return (lo, hi)


def deriv_range_word(ifs: IfsSpec, word: Word, interval) -> tuple:
    """Enclosure of ``|phi_word'|`` over ``interval`` via the chain rule.

    The derivative of ``phi_{w1} o ... o phi_{wn}`` at ``x`` is the product of
    ``phi_{wk}'`` at the successive images, so each factor is bounded on the
    image of ``interval`` under the tail of the word.  Floating products are
    rounded outward; affine products are returned as is.
    """
    ifs.check_word(word)
    lo, hi = interval
    dlo = dhi = 1 if not word or ifs.is_exact else 1.0
    outward = not all(ifs.maps[s - 1].is_affine for s in word)
    for s in reversed(word):
        m = ifs.maps[s - 1]
        flo, fhi = m.deriv_range(lo, hi)
        dlo, dhi = dlo * flo, dhi * fhi
        if outward:
            dlo, dhi = _down(dlo), _up(dhi)
        lo, hi = m.image(lo, hi)
    return (dlo, dhi)


def geometric_potential(ifs: IfsSpec, first_symbol: int, x) -> float:
    """``-ln |phi_i'(x)|``, the geometric potential at a point coded by ``(i, ...)``."""
    ifs.check_word((first_symbol,))
    d = ifs.maps[first_symbol - 1].deriv(x)
    if d <= 0:
        raise InvalidSpecError(f"map {first_symbol} has vanishing derivative at {x}")
    return -math.log(d)


def birkhoff_sum(ifs: IfsSpec, word: Word, x) -> float:
    """Birkhoff sum of the geometric potential along the orbit coded by ``word``.

    Equals ``-ln |phi_word'(x)|`` by the chain rule.
    """
    ifs.check_word(word)
    total = []
    for s in reversed(word):
        total.append(geometric_potential(ifs, s, x))
        x = ifs.maps[s - 1].eval(x)
    return math.fsum(total)


def _cf_rational(x, dmax: int, tol: float):
    """Best continued-fraction approximation ``p/q`` of ``x`` with ``q <= dmax``.

    The residual is measured as ``|q x - p|``, so a match means ``x`` is
    rational to within ``tol / q``.  Returns ``(p, q, res)`` for the first
    convergent hitting ``tol``, or ``(None, q_last, res_last)`` when the
    denominators leave the cap first.
    """
    h0, h1 = mpmath.mpf(0), mpmath.mpf(1)
    k0, k1 = mpmath.mpf(1), mpmath.mpf(0)
    y = mpmath.mpf(x)
    err = mpmath.inf
    for _ in range(200):
        ai = mpmath.floor(y)
        h0, h1 = h1, ai * h1 + h0
        k0, k1 = k1, ai * k1 + k0
        if k1 > dmax:
            return None, int(k0), float(err)
        err = abs(k1 * x - h1)
        if err <= tol:
            return int(h1), int(k1), float(err)
        frac = y - ai
        if frac == 0:
            return int(h1), int(k1), 0.0
        y = 1 / frac
    return None, int(k1), float(err)


def lattice_classify(ratios: Sequence[Real], dmax: int = 10**6, tol: float = 1e-12,
                     undecided_band: float = 1e-8):
    """Decide whether the logarithms of the ratios generate a discrete group.

    Parameters
    ----------
    ratios : sequence of real
        Contraction ratios; signs are ignored.
    dmax : int
        Denominator cap for the continued-fraction test.
    tol : float
        A convergent ``p/q`` of a log-ratio ``x`` with ``|q x - p| <= tol``
        counts as an exact match.
    undecided_band : float
        If the best capped convergent has ``|q x - p|`` below this value the
        answer is :class:`Undecided` instead of :class:`Nonlattice`.

    Returns
    -------
    Lattice | Nonlattice | Undecided
    """
    if len(ratios) < 2:
        raise InvalidSpecError("need at least two ratios")
    with mpmath.workdps(50):
        logs = [-mpmath.log(abs(mpmath.mpf(Fraction(r).numerator) / Fraction(r).denominator))
                if isinstance(r, Fraction) else -mpmath.log(abs(mpmath.mpf(r))) for r in ratios]
        base = logs[0]
        nums, dens = [], []
        for lg in logs[1:]:
            p, q, err = _cf_rational(lg / base, dmax, tol)
            if p is None:
                return Undecided() if err < undecided_band else Nonlattice()
            nums.append(p)
            dens.append(q)
        big = math.lcm(*dens) if dens else 1
        ints = [big] + [p * (big // q) for p, q in zip(nums, dens)]
        g = math.gcd(*ints)
        return Lattice(float(base * g / big))


def primary_gaps(ifs: IfsSpec) -> GapFamily:
    """Bounded components of the hull minus the depth-one cylinder hulls.

    Raises
    ------
    IntervalRegimeError
        When the depth-one hulls tile the hull, i.e. the attractor is an interval.
    """
    hulls = sorted(cylinder_hull(ifs, (i,)) for i in range(1, ifs.nsym + 1))
    gaps = tuple((h1[1], h2[0]) for h1, h2 in zip(hulls, hulls[1:]) if h2[0] > h1[1])
    if not gaps:
        raise IntervalRegimeError(ifs.hull)
    return GapFamily(gaps)


def distortion_bound(ifs: IfsSpec, n: int) -> DistortionBound:
    """Bounded-distortion constant for depth-``n`` cylinders.

    Uses ``exp(c / (1 - r**alpha) * D_n**alpha)`` with ``c`` the largest
    Hoelder constant of ``ln|phi_i'|``, ``alpha`` the smallest exponent, ``r``
    the contraction bound and ``D_n`` an upper bound on depth-``n`` cylinder
    diameters.  Families with a sharper closed form provide it through
    ``ifs.symbolic``.
    """
    if n < 0:
        raise ValueError("depth must be nonnegative")
    if ifs.is_affine:
        return DistortionBound(n, 1.0)
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "distortion"):
        return DistortionBound(n, sym.distortion(n))
    c = max(m.holder_constant for m in ifs.maps)
    alpha = min(m.holder_exponent for m in ifs.maps)
    r = ifs.contraction_bound
    diam = float(ifs.hull[1] - ifs.hull[0]) * r**n
    return DistortionBound(n, math.exp(c / (1 - r**alpha) * diam**alpha))
