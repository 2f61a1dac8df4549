"""Self-similar scaling solutions of the diagonal-kernel aggregation
equations, and the direct kinetics to check them against.

The solver suite covers the non-gelling (lambda < 1), marginal
(lambda = 1) and gelling (lambda > 1) regimes: transcendental correction
exponents, local power series, global pantograph marching with dense
output, the critical-tau shooting search, and dyadic-mass kinetics with
scaling-collapse diagnostics.
"""
from ._core import BACKEND
from .errors import (
    AggscaleError,
    BelowLimit,
    BracketFailure,
    HorizonExhausted,
    InconsistentDelta,
    InsufficientDecay,
    NegativeConcentration,
    NegativeCrossing,
    NoBracket,
    NumericalError,
    OutOfDomain,
    RegimeViolation,
    ResidualBlowup,
    TooFewTerms,
    ValidationError,
    WindowTooEarly,
)
from .kinetics import KineticsState, collapse, simulate, time_to_m2_ratio
from .model import Regime, ScalingProblem, make_problem, phi_from_psi
from .pantograph import (
    SampledSolution,
    check_decay_bound,
    fit_exponential_tail,
    march,
    write_solution_csv,
)
from .roots import RootResult, solve_delta_marginal, solve_delta_nongel
from .series import LocalSeries, estimate_radius, gel_series, marginal_series, nongel_series
from .shoot import (
    TauSearchResult,
    TrajectoryVerdict,
    Verdict,
    classify,
    degenerate_probe,
    extract_scaling_function,
    find_tau,
    scan_tau,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "AggscaleError", "ValidationError", "NumericalError",
    "RegimeViolation", "OutOfDomain", "NoBracket", "BelowLimit",
    "InconsistentDelta", "TooFewTerms", "NegativeCrossing", "ResidualBlowup",
    "InsufficientDecay", "BracketFailure", "HorizonExhausted",
    "WindowTooEarly", "NegativeConcentration",
    "Regime", "ScalingProblem", "make_problem", "phi_from_psi",
    "RootResult", "solve_delta_nongel", "solve_delta_marginal",
    "LocalSeries", "nongel_series", "gel_series", "marginal_series", "estimate_radius",
    "SampledSolution", "march", "check_decay_bound", "fit_exponential_tail",
    "write_solution_csv",
    "Verdict", "TrajectoryVerdict", "TauSearchResult",
    "classify", "find_tau", "scan_tau", "extract_scaling_function", "degenerate_probe",
    "KineticsState", "simulate", "time_to_m2_ratio", "collapse",
]
