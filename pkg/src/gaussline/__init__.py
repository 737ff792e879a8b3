"""Continued-fraction dynamics, Gibbs measures of the Gauss map and their
Fourier transforms.
"""

__version__ = "0.1.0"

from .contfrac import (
    ConvergentQuad,
    CylinderInterval,
    cf_digits,
    continuants,
    cylinder,
    inverse_branch,
    inverse_branch_derivative,
    log_continuant,
    mirror,
)
from .errors import (
    BracketError,
    BudgetError,
    DivergentPressureError,
    DomainError,
    FitError,
    GausslineError,
    PrecisionError,
)
from .measure import (
    bernoulli,
    box_inverse,
    cdf,
    cylinder_mass,
    gauss,
    lebesgue,
    minkowski,
    question_mark,
    sample,
    tail_mass,
)
