"""Exception hierarchy shared by all solver modules.

Two broad families: ``ValidationError`` for inputs outside the physical or
numerical windows (CLI exit code 2) and ``NumericalError`` for failures of
the machinery itself (CLI exit code 3).
"""
from __future__ import annotations


class AggscaleError(Exception):
    """Base class for all package errors."""


class ValidationError(AggscaleError, ValueError):
    """Caller passed a parameter outside its admissible window."""


class NumericalError(AggscaleError, RuntimeError):
    """A numerical procedure failed to meet its contract."""


class RegimeViolation(ValidationError):
    """Parameters are inconsistent with the requested regime window."""


class OutOfDomain(ValidationError):
    """Evaluation point maps beyond the computed solution range."""


class NoBracket(NumericalError):
    """Root bracketing failed; the equation has no sign change in range."""


class BelowLimit(ValidationError):
    """psi0 at or below 1/(2 ln 2); the alternative family has no root."""


class InconsistentDelta(ValidationError):
    """Supplied exponent does not satisfy the order-1 matching condition."""


class TooFewTerms(ValidationError):
    """Not enough series coefficients for a tail-ratio radius estimate."""


class NegativeCrossing(NumericalError):
    """The marched solution crossed zero going down.

    A legitimate outcome when shooting in the gelling regime, fatal
    elsewhere.  Carries the refined crossing location and, when available,
    the partial solution for diagnostics.
    """

    def __init__(self, location: float, solution=None):
        super().__init__(f"solution crossed zero at {location!r}")
        self.location = location
        self.solution = solution


class ResidualBlowup(NumericalError):
    """Integral-form residual exceeded 100x the configured tolerance."""


class InsufficientDecay(NumericalError):
    """Solution has not decayed enough for a meaningful tail fit."""


class BracketFailure(NumericalError):
    """Initial tau endpoints did not classify as crossing/tail."""


class HorizonExhausted(NumericalError):
    """Classification stayed undecided after the maximum horizon doublings."""


class WindowTooEarly(ValidationError):
    """Requested collapse window contains too little growth."""


class NegativeConcentration(NumericalError):
    """Kinetics integrator produced concentrations below -tol."""
