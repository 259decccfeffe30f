"""Ready-made systems used by the CLI, tests and documentation."""
from __future__ import annotations

from fractions import Fraction

from .symbolic import Affine, IfsSpec, Lattice, Nonlattice


def _affine_system(params, exact: bool, lattice=None, domain=(0, 1)) -> IfsSpec:
    conv = Fraction if exact else (lambda v: float(Fraction(v)))
    maps = [Affine(conv(r), conv(b)) for r, b in params]
    return IfsSpec(tuple(conv(v) for v in domain), tuple(maps), lattice=lattice)


def cantor(exact: bool = False) -> IfsSpec:
    """Middle-third Cantor set: ``x/3`` and ``x/3 + 2/3``."""
    import math
    return _affine_system([("1/3", "0"), ("1/3", "2/3")], exact, Lattice(math.log(3)))


def two_three(exact: bool = False) -> IfsSpec:
    """Nonlattice set with ratios 1/2 and 1/3: ``x/2`` and ``x/3 + 2/3``."""
    return _affine_system([("1/2", "0"), ("1/3", "2/3")], exact, Nonlattice())


def fifths(exact: bool = False) -> IfsSpec:
    """Three maps of ratio 1/5 at offsets 0, 2/5, 4/5 (two primary gaps)."""
    import math
    return _affine_system([("1/5", "0"), ("1/5", "2/5"), ("1/5", "4/5")], exact, Lattice(math.log(5)))


def half_quarter(exact: bool = False) -> IfsSpec:
    """Lattice set with ratios 1/2 and 1/4: ``x/2`` and ``x/4 + 3/4``."""
    import math
    return _affine_system([("1/2", "0"), ("1/4", "3/4")], exact, Lattice(math.log(2)))


def flipped(exact: bool = False) -> IfsSpec:
    """Orientation-reversing variant: ``-x/2 + 1/2`` and ``x/3 + 2/3``."""
    return _affine_system([("-1/2", "1/2"), ("1/3", "2/3")], exact, Nonlattice())


def unit_interval(exact: bool = False) -> IfsSpec:
    """``x/2`` and ``x/2 + 1/2``; the attractor is ``[0, 1]``."""
    return _affine_system([("1/2", "0"), ("1/2", "1/2")], exact)


def staircase_image(level: int = 1, base: IfsSpec | None = None) -> IfsSpec:
    """Induced system on the set obtained by straightening a staircase over ``base``."""
    from .images import GnMap
    return GnMap(base if base is not None else cantor(), level).induced_system()


SHIPPED = {
    "cantor": cantor,
    "two_three": two_three,
    "fifths": fifths,
    "half_quarter": half_quarter,
    "flipped": flipped,
    "unit_interval": unit_interval,
}

# systems whose attractor has gaps (zero length); the interval is the degenerate case
GAPPED = ("cantor", "two_three", "fifths", "half_quarter", "flipped")
