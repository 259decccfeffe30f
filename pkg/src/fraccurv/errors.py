"""Exception hierarchy shared by all modules."""


class FracCurvError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpecError(FracCurvError, ValueError):
    """The iterated function system violates a structural hypothesis."""


class IntervalRegimeError(FracCurvError):
    """The attractor is a compact interval, so it has no complementary gaps.

    In this regime both curvature scaling exponents vanish and the curvature
    measures are the boundary counting measure (halved) and Lebesgue measure
    restricted to the interval.
    """

    def __init__(self, hull):
        self.hull = hull
        super().__init__(f"attractor is the interval [{hull[0]}, {hull[1]}]; no gaps")


class RangeError(FracCurvError, ValueError):
    """A scale parameter lies outside the validity range of a profile."""


class ClearanceError(FracCurvError, ValueError):
    """A window endpoint is too close to (or inside) the attractor."""


class BudgetExceededError(FracCurvError):
    """An enumeration budget was exhausted before the requested resolution."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
