"""Pressure, dimension, transfer operator, conformal and Gibbs measures.

Cylinder functions and masses are stored as flat arrays indexed by
:func:`fraccurv.symbolic.word_index` (first symbol most significant), so
the word ``i w`` truncated to depth ``m`` has index
``(i - 1) * N**(m - 1) + idx(w) // N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import BudgetExceededError, InvalidSpecError
from .symbolic import IfsSpec, distortion_bound

# outward widening applied to floating log-derivative enclosures
_LOG_SLACK = 4e-16


@dataclass(frozen=True)
class PressureBracket:
    t: float
    depth: int
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class DimensionBracket:
    lo: float
    hi: float
    depth: int
    converged: bool = True

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class CylinderFunction:
    """Values on depth-``depth`` cylinders with a sup-norm error bound."""

    depth: int
    values: np.ndarray
    error: float
    eigenvalue: float | None = None
    converged: bool = True


@dataclass
class MeasureApprox:
    """Cylinder masses at a fixed depth.

    ``rel_error`` bounds the relative error of each mass.
    """

    depth: int
    masses: np.ndarray
    rel_error: float
    nsym: int = field(default=2, repr=False)

    def coarsen(self, depth: int) -> np.ndarray:
        """Masses summed up to a shallower depth."""
        if depth > self.depth:
            raise ValueError("cannot refine a measure by coarsening")
        return self.masses.reshape(self.nsym**depth, -1).sum(axis=1)


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    error: float


def moran_dimension(ratios, tol: float = 1e-15) -> float:
    """Root of ``sum |r_i|**s = 1``.

    Bisection brackets the root, then Newton steps polish it to the last bit.
    """
    logs = np.log(np.abs(np.asarray([float(r) for r in ratios])))
    if len(logs) < 2 or np.any(logs >= 0):
        raise InvalidSpecError("need at least two ratios with modulus in (0, 1)")

    def f(s):
        return math.fsum(np.exp(s * logs)) - 1.0

    lo, hi = 0.0, 1.0
    if f(hi) > 0:
        # overlapping similarity dimension; still well defined
        while f(hi) > 0:
            hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    for _ in range(5):
        df = math.fsum(logs * np.exp(s * logs))
        step = f(s) / df
        s -= step
        if abs(step) < tol:
            break
    return s


@lru_cache(maxsize=64)
def word_log_derivative_ranges(ifs: IfsSpec, n: int) -> tuple:
    """Arrays ``(log lo, log hi)`` enclosing ``ln|phi_w'|`` on the hull, for all words of length ``n``."""
    if ifs.is_affine:
        r = np.log(np.abs(np.array([float(m.ratio) for m in ifs.maps])))
        logs = np.zeros(1)
        for _ in range(n):
            logs = (r[:, None] + logs[None, :]).ravel()
        return logs, logs
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "word_log_derivative_ranges"):
        return sym.word_log_derivative_ranges(n)
    lo, hi = [float(v) for v in ifs.hull]
    hulls = [(lo, hi)]
    dlo = [0.0]
    dhi = [0.0]
    for _ in range(n):
        nh, nlo, nhi = [], [], []
        for m in ifs.maps:
            for (u, v), a, b in zip(hulls, dlo, dhi):
                flo, fhi = m.deriv_range(u, v)
                nh.append(m.image(u, v))
                nlo.append(a + math.log(flo) - _LOG_SLACK)
                nhi.append(b + math.log(fhi) + _LOG_SLACK)
        hulls, dlo, dhi = nh, nlo, nhi
    return np.array(dlo), np.array(dhi)


def pressure_bracket(ifs: IfsSpec, t: float, n: int, max_words: int = 2**22) -> PressureBracket:
    """Certified bracket for the pressure of ``-t`` times the geometric potential.

    Partition sums with infimal (supremal) cylinder derivatives are super-
    (sub-) multiplicative, so ``n**-1 ln Z_n`` bounds the limit from below
    (above) at every depth.
    """
    if n < 1:
        raise ValueError("depth must be at least 1")
    if ifs.nsym**n > max_words:
        raise BudgetExceededError(f"{ifs.nsym}**{n} words exceed the budget {max_words}")
    llo, lhi = word_log_derivative_ranges(ifs, n)
    a = logsumexp(t * llo) / n
    b = logsumexp(t * lhi) / n
    return PressureBracket(t, n, float(min(a, b)), float(max(a, b)))


def _root(logs: np.ndarray) -> float:
    def f(s):
        return logsumexp(s * logs)

    hi = 1.0
    while f(hi) > 0:
        hi *= 2
        if hi > 64:
            raise InvalidSpecError("pressure has no root below 64")
    return brentq(f, 0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def conformal_dimension(ifs: IfsSpec, tol: float = 1e-10, max_depth: int = 24,
                        max_words: int = 2**18) -> DimensionBracket:
    """Bracket the Minkowski dimension as the zero of the pressure.

    Depth increases until the bracket is narrower than ``tol`` or the word
    budget runs out; in the latter case the best bracket found so far is
    returned with ``converged=False``.
    """
    lo, hi = 0.0, 1.0
    depth = 0
    for n in range(1, max_depth + 1):
        if ifs.nsym**n > max_words:
            break
        llo, lhi = word_log_derivative_ranges(ifs, n)
        # supremal derivatives give the larger root
        r_lo, r_hi = _root(llo), _root(lhi)
        lo = max(lo, r_lo - 1e-15)
        hi = min(hi, r_hi + 1e-15)
        depth = n
        if hi - lo < tol:
            return DimensionBracket(lo, hi, depth, True)
    return DimensionBracket(lo, hi, depth, False)


@lru_cache(maxsize=64)
def rep_derivatives(ifs: IfsSpec, m: int) -> np.ndarray:
    """``D[i, w] = |phi_{i+1}'(x_w)|`` at the depth-``m`` representatives ``x_w = phi_w(min hull)``."""
    if ifs.is_affine:
        r = np.abs(np.array([float(mp.ratio) for mp in ifs.maps]))
        return np.repeat(r[:, None], ifs.nsym**m, axis=1)
    sym = ifs.symbolic
    if sym is not None and hasattr(sym, "rep_derivatives"):
        return sym.rep_derivatives(m)
    reps = representatives(ifs, m)
    return np.array([[mp.deriv(x) for x in reps] for mp in ifs.maps])


def representatives(ifs: IfsSpec, m: int) -> np.ndarray:
    """Points ``phi_w(min hull)`` for all words of length ``m``, in index order."""
    reps = [ifs.hull[0]]
    for _ in range(m):
        reps = [mp.eval(x) for mp in ifs.maps for x in reps]
    return np.array([float(x) for x in reps])


def _check_function(ifs: IfsSpec, f: CylinderFunction) -> None:
    if f.values.shape != (ifs.nsym**f.depth,):
        raise ValueError("cylinder function has the wrong number of values")
    if f.depth < 1:
        raise ValueError("cylinder functions need depth at least 1")


def _apply(D_t: np.ndarray, vals: np.ndarray, nsym: int) -> np.ndarray:
    # children (i w)|m live at i*N**(m-1) + w // N
    f2 = vals.reshape(nsym, -1)
    kids = np.repeat(f2, nsym, axis=1)
    return (D_t * kids).sum(axis=0)


def _apply_dual(D_t: np.ndarray, nu: np.ndarray, nsym: int) -> np.ndarray:
    prod = D_t * nu[None, :]
    return prod.reshape(nsym, -1, nsym).sum(axis=2).ravel()


def pf_apply(ifs: IfsSpec, t: float, f: CylinderFunction) -> CylinderFunction:
    """One application of the transfer operator with weight ``|phi_i'|**t``."""
    _check_function(ifs, f)
    D_t = rep_derivatives(ifs, f.depth) ** t
    out = _apply(D_t, f.values, ifs.nsym)
    norm = float(D_t.sum(axis=0).max())
    rho = distortion_bound(ifs, f.depth).rho
    err = norm * f.error + norm * float(np.abs(f.values).max()) * (rho**abs(t) - 1.0)
    return CylinderFunction(f.depth, out, err)


def _power(op, vec, pair, iters, tol):
    lam = None
    for k in range(iters):
        nxt = op(vec)
        lam = float(nxt @ pair) if pair is not None else float(nxt.sum())
        nxt = nxt / lam
        change = float(np.abs(nxt - vec).max() / np.abs(nxt).max())
        vec = nxt
        if change < tol and k > 0:
            return vec, lam, change, True
    return vec, lam, change, False


def conformal_measure(ifs: IfsSpec, delta: float, depth: int, iters: int = 10_000,
                      tol: float = 1e-15) -> MeasureApprox:
    """Depth-``depth`` masses of the ``delta``-conformal measure.

    The masses form the fixed point of the dual transfer operator on cylinder
    masses, ``nu[i w'] = sum_j |phi_i'(x_{w' j})|**delta nu[w' j]``, which
    discretizes the conformality relation.  For similarities the fixed point
    is exactly ``|r_w|**delta``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    N = ifs.nsym
    D_t = rep_derivatives(ifs, depth) ** delta
    nu = np.full(N**depth, 1.0 / N**depth)
    nu, _, _, _ = _power(lambda v: _apply_dual(D_t, v, N), nu, None, max(iters, depth + 2), tol)
    nu = nu / math.fsum(nu)
    rho = distortion_bound(ifs, depth).rho
    return MeasureApprox(depth, nu, rho**delta - 1.0, N)


def pf_eigenfunction(ifs: IfsSpec, delta: float, depth: int, iters: int = 10_000,
                     tol: float = 1e-14) -> CylinderFunction:
    """Leading eigenfunction ``h`` of the transfer operator at ``t = delta``.

    Normalized so that ``int h d nu = 1`` for the conformal measure of the
    same depth.  The discretized operator is primitive (the word ``1...1``
    maps to itself), so plain power iteration converges.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    N = ifs.nsym
    nu = conformal_measure(ifs, delta, depth).masses
    D_t = rep_derivatives(ifs, depth) ** delta
    h = np.ones(N**depth)
    h, lam, change, ok = _power(lambda v: _apply(D_t, v, N), h, nu, iters, tol)
    h = h / float(h @ nu)
    rho = distortion_bound(ifs, depth).rho
    err = float(h.max()) * (rho ** (2 * delta) - 1.0) + change * float(h.max())
    return CylinderFunction(depth, h, err, eigenvalue=lam, converged=ok)


def gibbs_measure(ifs: IfsSpec, delta: float, depth: int) -> MeasureApprox:
    """Masses of ``h nu``, renormalized to total one."""
    nu = conformal_measure(ifs, delta, depth)
    h = pf_eigenfunction(ifs, delta, depth)
    mu = h.values * nu.masses
    mu = mu / math.fsum(mu)
    rel = 2 * (nu.rel_error + h.error / float(h.values.min()))
    return MeasureApprox(depth, mu, rel, ifs.nsym)


def gibbs_entropy(ifs: IfsSpec, delta: float, depth: int = 10) -> EntropyEstimate:
    """Measure-theoretic entropy ``delta * int xi d mu`` of the equilibrium measure.

    Similarities use the closed form ``-delta * sum r_i**delta ln r_i``.
    Otherwise the potential is sampled at ``x_{sigma w}`` on depth-``depth``
    cylinders; the error combines the mass error and the variation of the
    potential on cylinders of depth ``depth - 1``.
    """
    if ifs.is_affine:
        r = np.abs(np.array([float(m.ratio) for m in ifs.maps]))
        terms = -np.log(r) * r**delta
        val = delta * math.fsum(terms)
        return EntropyEstimate(val, 8 * np.finfo(float).eps * val)
    if depth < 2:
        raise ValueError("depth must be at least 2")
    mu = gibbs_measure(ifs, delta, depth)
    D = rep_derivatives(ifs, depth - 1)
    xi = -np.log(D).ravel()  # index i * nsym**(m-1) + idx(sigma w) = idx(w)
    val = delta * math.fsum(mu.masses * xi)
    var = math.log(distortion_bound(ifs, depth - 1).rho)
    err = delta * (float(xi.max()) * 2 * mu.rel_error + var)
    return EntropyEstimate(val, err)
