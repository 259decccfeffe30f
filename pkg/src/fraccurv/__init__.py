"""Minkowski content and fractal curvature of self-similar and self-conformal subsets of the line."""

__version__ = "0.1.0"

from .errors import (BudgetExceededError, ClearanceError, FracCurvError, IntervalRegimeError,
                     InvalidSpecError, RangeError)
from .symbolic import Affine, IfsSpec, Lattice, Nonlattice, Undecided, lattice_classify
from .thermo import conformal_dimension, gibbs_entropy, moran_dimension
from .gaps import Window, attractor_profile, enumerate_gaps, localized_profile
from .curvature import average_content, average_curvature0, theoretical_constants
from .images import GnMap, StaircaseCdf

__all__ = [
    "Affine", "BudgetExceededError", "ClearanceError", "FracCurvError", "GnMap", "IfsSpec",
    "IntervalRegimeError", "InvalidSpecError", "Lattice", "Nonlattice", "RangeError",
    "StaircaseCdf", "Undecided", "Window", "attractor_profile", "average_content",
    "average_curvature0", "conformal_dimension", "enumerate_gaps", "gibbs_entropy",
    "lattice_classify", "localized_profile", "moran_dimension", "theoretical_constants",
]
