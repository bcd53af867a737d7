"""Household time allocation over digital activities.

Structural model of browsing-time allocation with isoelastic activity
utilities, estimators for adoption effects and Engel curves on household
panels, measurement utilities for exposure and weather instruments, synthetic
data generators with known ground truth, and the calibration that maps
estimated treatment effects into a technology efficiency gain.
"""

from .calibration import (
    CalibrationCell,
    CalibrationInputs,
    InfeasibleBoundsError,
    NoSolutionError,
    compute_az,
    eta_bounds,
    grid,
    implied_etas,
    invert_psi,
    invert_psi0,
)
from .errors import ConfigError, DataError, VerificationError
from .model import (
    ActivityParams,
    Allocation,
    AllocationError,
    Preferences,
    TechShock,
    TreatmentEffects,
    UnsupportedConfigurationError,
    adoption_gain,
    demand,
    exact_effects,
    firstorder_effects,
    gap_identity_lhs,
    should_adopt,
    solve_allocation,
    utility,
)
from .numerics import Bracket, ConvergenceError, GridSpec, fd_elasticity, grid_maximize

__version__ = "1.0.0"

__all__ = [
    "ActivityParams",
    "Allocation",
    "AllocationError",
    "Bracket",
    "CalibrationCell",
    "CalibrationInputs",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "GridSpec",
    "InfeasibleBoundsError",
    "NoSolutionError",
    "Preferences",
    "TechShock",
    "TreatmentEffects",
    "UnsupportedConfigurationError",
    "VerificationError",
    "adoption_gain",
    "compute_az",
    "demand",
    "eta_bounds",
    "exact_effects",
    "fd_elasticity",
    "firstorder_effects",
    "gap_identity_lhs",
    "grid",
    "grid_maximize",
    "implied_etas",
    "invert_psi",
    "invert_psi0",
    "should_adopt",
    "solve_allocation",
    "utility",
]
