"""Mixed-boundary disk amplitudes of the matrix chain, exactly, order by order in h.

The spectral curve is solved as Laurent polynomials in ``p`` with h-series
coefficients; mixed amplitudes follow by interpolation on curve fibers; an
independent planar Wick recursion provides the reference moments.
"""

from .algebra import AlgebraError, TruncationTooShort
from .amplitudes import (
    CalibrationFailed,
    MixedAmplitude,
    UnstableCoefficient,
    apply_calibration,
    base_amplitude,
    calibrate_conventions,
    extract_moments,
    full_amplitude,
    kernel_K,
    recursion_step,
    verify_loop_equation,
)
from .fibers import DegenerateFiber, fiber_points
from .oracle import BudgetExceeded, oracle_moment_table, planar_moment
from .spectral_curve import BranchNotFound, ChainModel, CurveData, reconstruct_E, solve_curve
from .tables import MomentTable

__version__ = "0.1.0"

__all__ = [
    "AlgebraError",
    "BranchNotFound",
    "BudgetExceeded",
    "CalibrationFailed",
    "ChainModel",
    "CurveData",
    "DegenerateFiber",
    "MixedAmplitude",
    "MomentTable",
    "TruncationTooShort",
    "UnstableCoefficient",
    "apply_calibration",
    "base_amplitude",
    "calibrate_conventions",
    "extract_moments",
    "fiber_points",
    "full_amplitude",
    "kernel_K",
    "oracle_moment_table",
    "planar_moment",
    "reconstruct_E",
    "recursion_step",
    "solve_curve",
    "verify_loop_equation",
]
