"""Nonlinear eigenvalue search in tau for the gelling regime.

Off the critical value, a gelling trajectory marched in zeta either
crosses to negative values (tau too small) or survives as a positive
function that at large zeta can only follow the slow algebraic 1/zeta
tail (tau too large).  Between the two sits the separatrix tau*, the
physically admissible exponent.  ``classify`` labels one trajectory,
``find_tau`` bisects on the label.

Near the critical value the positive trajectories spend a long stretch
on a flat plateau before the 1/zeta tail takes over.  That plateau is the
"saturation" of the reference solution plots and is classified as the
above-critical side: a genuinely saturating positive solution is
impossible off the window edge, so a stalled positive trajectory must be
heading into the algebraic tail.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketFailure,
    HorizonExhausted,
    NegativeCrossing,
    RegimeViolation,
    ValidationError,
)
from .model import Regime, ScalingProblem, make_problem
from .pantograph import march
from .series import _gel_series_unchecked, gel_series

__all__ = [
    "Verdict",
    "TrajectoryVerdict",
    "TauSearchResult",
    "classify",
    "find_tau",
    "scan_tau",
    "extract_scaling_function",
    "degenerate_probe",
]

logger = logging.getLogger(__name__)

TAIL_SLOPE_WINDOW = 0.15     # |slope + 1| tolerance for the 1/zeta tail
SATURATION_SLOPE = 0.05      # |local slope| below this counts as a plateau
SATURATION_MIN_DECAY = 1e-2  # psi must have fallen this far before a plateau counts
OSCILLATION_MIN_AMPLITUDE = 0.02  # in log psi
_SEED_ORDER = 20
_MAX_DOUBLINGS = 4
_N_TAIL_SAMPLES = 240


class Verdict(enum.Enum):
    NEGATIVE_CROSSING = "negative-crossing"
    ALGEBRAIC_TAIL = "algebraic-tail"
    FAST_DECAY = "fast-decay"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class TrajectoryVerdict:
    tag: Verdict
    crossing_location: float | None = None
    tail_exponent: float | None = None
    tail_ci: float | None = None
    oscillation_period: float | None = None


@dataclass(frozen=True)
class TauSearchResult:
    tau_star: float
    bracket: tuple[float, float]
    sigma: float
    evaluations: int
    march_tol: float


def degenerate_probe(lam: float, order: int = _SEED_ORDER):
    """Problem/seed pair for the exactly-solvable tau = lambda+1 endpoint.

    Not constructible through make_problem; used as an integrator check
    (the equation collapses to psi' = (1 - 2**(lambda-1)) psi**2) and as a
    bracket-endpoint probe.
    """
    problem = ScalingProblem(lam=lam, regime=Regime.GELLING, tau=lam + 1.0)
    seed = _gel_series_unchecked(lam, lam + 1.0, order)
    return problem, seed


def _slope_fit(logz: np.ndarray, logp: np.ndarray) -> tuple[float, float, np.ndarray]:
    A = np.column_stack([logz, np.ones_like(logz)])
    coef, *_ = np.linalg.lstsq(A, logp, rcond=None)
    resid = logp - A @ coef
    n = len(logz)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        var = s2 / float(np.sum((logz - logz.mean()) ** 2))
        ci = 1.96 * math.sqrt(var)
    else:
        ci = math.inf
    return float(coef[0]), ci, resid


def _dominant_log_period(logz: np.ndarray, resid: np.ndarray) -> float | None:
    """Periodogram of the detrended tail residuals on the uniform log grid."""
    n = len(resid)
    if n < 16:
        return None
    win = np.hanning(n)
    spec = np.fft.rfft((resid - resid.mean()) * win)
    amps = 2.0 * np.abs(spec) / win.sum()
    if len(amps) < 3:
        return None
    k = 1 + int(np.argmax(amps[1:]))
    if amps[k] < OSCILLATION_MIN_AMPLITUDE:
        return None
    span = logz[-1] - logz[0]
    return span / k


def classify(problem: ScalingProblem, horizon: float, tol: float = 1e-11,
             seed_order: int = _SEED_ORDER) -> TrajectoryVerdict:
    """March one gelling trajectory to ``horizon`` and label its fate."""
    if problem.regime is not Regime.GELLING:
        raise RegimeViolation("classification is defined for gelling problems only")
    seed = gel_series(problem.lam, problem.tau, seed_order)
    ratio = problem.coeffs.ratio
    # seed early enough that the horizon spans >= 10 delay intervals
    # (seeding below radius/4 only improves the series truncation error)
    h0 = min(seed.handoff, horizon * ratio**10)
    if h0 < seed.handoff / 16.0:
        raise ValidationError(
            f"horizon {horizon} covers fewer than 10 delay intervals even from a "
            f"seed handoff pushed down to {seed.handoff / 16.0:.3g}")
    try:
        sol = march(problem, seed, horizon, tol=tol, handoff=h0)
    except NegativeCrossing as nc:
        return TrajectoryVerdict(tag=Verdict.NEGATIVE_CROSSING,
                                 crossing_location=nc.location)
    if sol.decayed:
        return TrajectoryVerdict(tag=Verdict.FAST_DECAY)

    zs = np.geomspace(sol.front / 100.0, sol.front * 0.999999, _N_TAIL_SAMPLES)
    ps = sol.eval(zs)
    if np.any(ps <= 0.0):
        # numerically grazing zero without a detected crossing
        return TrajectoryVerdict(tag=Verdict.UNDECIDED)
    logz, logp = np.log(zs), np.log(ps)
    slope, ci, resid = _slope_fit(logz, logp)

    if abs(slope + 1.0) <= TAIL_SLOPE_WINDOW:
        period = _dominant_log_period(logz, resid)
        return TrajectoryVerdict(tag=Verdict.ALGEBRAIC_TAIL, tail_exponent=slope,
                                 tail_ci=ci, oscillation_period=period)

    # flat positive plateau at the far end after substantial decay: the
    # "saturating" branch heading into the algebraic tail (a below-critical
    # trajectory dives through zero instead of flattening)
    last = logz >= logz[-1] - 0.3 * math.log(10.0)
    slope_last, ci_last, _ = _slope_fit(logz[last], logp[last])
    if abs(slope_last) <= SATURATION_SLOPE and ps[-1] <= SATURATION_MIN_DECAY * seed.psi0:
        period = _dominant_log_period(logz, resid)
        return TrajectoryVerdict(tag=Verdict.ALGEBRAIC_TAIL, tail_exponent=slope_last,
                                 tail_ci=ci_last, oscillation_period=period)
    return TrajectoryVerdict(tag=Verdict.UNDECIDED)


def _classify_extending(lam: float, tau: float, horizon: float, tol: float,
                        counter: list[int]) -> TrajectoryVerdict:
    h = horizon
    for _ in range(_MAX_DOUBLINGS + 1):
        counter[0] += 1
        v = classify(make_problem(lam, tau), h, tol=tol)
        if v.tag is not Verdict.UNDECIDED:
            return v
        h *= 2.0
    raise HorizonExhausted(
        f"tau={tau}: trajectory undecided out to horizon {h / 2.0} "
        f"after {_MAX_DOUBLINGS} doublings")


def find_tau(lam: float, tol_tau: float = 1e-7, horizon: float = 1e3,
             march_tol: float = 1e-11) -> TauSearchResult:
    """Bisect tau between the crossing and algebraic-tail behaviours.

    The window is ((lam+3)/2, lam+1); endpoints are probed slightly
    inside.  FastDecay (underflow before the horizon) is logged as a
    potential direct hit and treated as the above-critical side so the
    bracket stays well defined.
    """
    if not lam > 1.0:
        raise RegimeViolation(f"tau search needs lambda > 1, got {lam}")
    if tol_tau < 1e-9:
        raise ValidationError(
            f"tol_tau={tol_tau} below the attainable resolution cap 1e-9 "
            "(separatrix sensitivity amplifies march error)")
    w_lo, w_hi = (lam + 3.0) / 2.0, lam + 1.0
    width = w_hi - w_lo
    lo = w_lo + 0.02 * width
    hi = w_hi - 0.10 * width
    counter = [0]

    def side(tau: float) -> str:
        v = _classify_extending(lam, tau, horizon, march_tol, counter)
        if v.tag is Verdict.NEGATIVE_CROSSING:
            return "below"
        if v.tag is Verdict.FAST_DECAY:
            logger.info("tau=%.12g decayed to the floor: potential direct hit on tau*", tau)
        return "above"

    if side(lo) != "below":
        raise BracketFailure(f"lower endpoint tau={lo} did not cross to negative values")
    if side(hi) != "above":
        raise BracketFailure(f"upper endpoint tau={hi} did not show an algebraic tail")

    while hi - lo > tol_tau:
        mid = 0.5 * (lo + hi)
        if side(mid) == "below":
            lo = mid
        else:
            hi = mid
    tau_star = 0.5 * (lo + hi)
    return TauSearchResult(tau_star=tau_star, bracket=(lo, hi),
                           sigma=1.0 + lam - tau_star, evaluations=counter[0],
                           march_tol=march_tol)


def scan_tau(lam: float, taus, horizon: float = 1e3,
             march_tol: float = 1e-11) -> list[TrajectoryVerdict]:
    """Classify a grid of tau values (horizon-extending, independent runs)."""
    counter = [0]
    return [_classify_extending(lam, float(t), horizon, march_tol, counter) for t in taus]


def extract_scaling_function(lam: float, tau_star: float, samples: int = 400,
                             x_min: float = 1e-4, x_max: float | None = None,
                             tol: float = 1e-10) -> np.ndarray:
    """March at tau* and tabulate Phi(x) = x**(-tau*) psi(zeta(x)).

    Near the origin x**tau* Phi -> 1 by the seed normalization, with the
    deviation growing like zeta(x), i.e. the x-space correction exponent
    1 + lambda - tau*.
    """
    problem = make_problem(lam, tau_star)
    seed = gel_series(lam, tau_star, _SEED_ORDER)
    vm = problem.varmap
    zeta_max = 1e3 if x_max is None else vm.to_transformed(x_max)
    sol = march(problem, seed, zeta_max, tol=tol)
    x_hi = vm.to_physical(sol.front * 0.999999)
    xs = np.geomspace(x_min, x_hi, samples)
    us = vm.to_transformed(xs)
    psi = sol.eval(us)
    phi = xs ** (-vm.prefactor_exponent) * psi
    out = np.empty(samples, dtype=[("var", float), ("psi", float),
                                   ("x", float), ("phi", float)])
    out["var"], out["psi"], out["x"], out["phi"] = us, psi, xs, phi
    return out
