"""Global marching of the pantograph equations from a local series seed.

The equation on each delay interval is an ODE whose delayed term is read
from already-computed history, so one forward sweep with dense output
solves it globally.  The sweep itself runs in the stepping core selected
at import (compiled or pure Python); this module owns seeding, solution
storage, the integral-form residual verification, the decay-bound check
and the exponential tail fit.

Tolerance semantics: ``tol`` is the contract tolerance (residual check,
ResidualBlowup threshold).  The internal stepping tolerance is mapped
superlinearly below it, which keeps the residual within contract in the
regions where the delayed-forcing cancellation amplifies stepping noise,
and makes the closed-form convergence test scale cleanly with tol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._core import march_core
from .errors import (
    NegativeCrossing,
    NumericalError,
    RegimeViolation,
    ResidualBlowup,
    InsufficientDecay,
    ValidationError,
)
from .model import Regime, ScalingProblem
from .series import LocalSeries

__all__ = [
    "SampledSolution",
    "DecayBoundReport",
    "march",
    "check_decay_bound",
    "fit_exponential_tail",
    "loglinear_decay_fit",
    "solution_table",
    "write_solution_csv",
]

LN2 = math.log(2.0)
TOL_MIN, TOL_MAX = 1e-12, 1e-4
DECAY_FLOOR_DEFAULT = 1e-300
_MAX_STEPS_DEFAULT = 2_000_000
_N_RESIDUAL_CHECKPOINTS = 64
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _stepping_rtol(tol: float) -> float:
    return min(max(0.05 * tol**1.5, 5e-14), 1e-6)


@dataclass(frozen=True)
class SampledSolution:
    """Marched psi on [0, front]: series seed below ``handoff``, dense
    step polynomials above, with integral-form residual metadata."""

    problem: ScalingProblem
    seed: LocalSeries
    handoff: float
    t0s: np.ndarray = field(repr=False)
    hs: np.ndarray = field(repr=False)
    y0s: np.ndarray = field(repr=False)
    q0s: np.ndarray = field(repr=False)
    q1s: np.ndarray = field(repr=False)
    q2s: np.ndarray = field(repr=False)
    q3s: np.ndarray = field(repr=False)
    front: float
    decayed: bool
    tol: float
    residual_max: float = math.nan
    nfev: int = 0

    @property
    def breakpoints(self) -> np.ndarray:
        """Delay-interval endpoints handoff / ratio**k up to the front."""
        ratio = self.problem.coeffs.ratio
        if ratio >= 1.0:
            return np.array([self.handoff, self.front])
        n = int(math.floor(math.log(self.front / self.handoff) / -math.log(ratio))) + 1
        return self.handoff * ratio ** -np.arange(n + 1)

    @property
    def delay_intervals_covered(self) -> float:
        ratio = self.problem.coeffs.ratio
        if ratio >= 1.0:
            return math.inf
        return math.log(self.front / self.handoff) / -math.log(ratio)

    def covers(self, u) -> bool:
        u = np.asarray(u)
        return bool(np.all((u >= 0.0) & (u <= self.front * (1.0 + 1e-12))))

    def eval(self, u):
        """psi at u (scalar or array); seed below handoff, dense above."""
        scalar = np.isscalar(u) or np.asarray(u).ndim == 0
        uu = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(uu)
        low = uu <= self.handoff
        if low.any():
            out[low] = self.seed.eval(uu[low])
        hi = ~low
        if hi.any():
            idx = np.clip(np.searchsorted(self.t0s, uu[hi], side="right") - 1,
                          0, len(self.t0s) - 1)
            th = np.minimum((uu[hi] - self.t0s[idx]) / self.hs[idx], 1.0)
            out[hi] = self.y0s[idx] + self.hs[idx] * th * (
                self.q0s[idx] + th * (self.q1s[idx] + th * (self.q2s[idx] + th * self.q3s[idx])))
        return float(out[0]) if scalar else out


def march(problem: ScalingProblem, seed: LocalSeries, end: float,
          tol: float = 1e-10, floor: float = DECAY_FLOOR_DEFAULT,
          handoff: float | None = None,
          max_steps: int = _MAX_STEPS_DEFAULT) -> SampledSolution:
    """March psi from the series seed out to ``end`` in the transformed
    variable.

    Stops early (``decayed`` flag) when psi drops below ``floor``.  For
    non-gelling problems note that values below roughly tol * psi0 are
    noise-dominated (the delayed forcing enters through a cancellation),
    so deep floors should be paired with correspondingly loose ``tol``.
    Raises :class:`NegativeCrossing` if psi hits zero, which only the
    gelling shooting loop treats as a regular outcome.
    """
    _expected_var = {Regime.NON_GELLING: "y", Regime.GELLING: "zeta", Regime.MARGINAL: "x"}
    if seed.variable != _expected_var[problem.regime]:
        raise ValidationError(f"seed in variable {seed.variable!r} cannot drive a "
                              f"{problem.regime.value} march")
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ValidationError(f"tol must lie in [{TOL_MIN}, {TOL_MAX}], got {tol}")
    h0 = seed.handoff if handoff is None else float(handoff)
    if not math.isfinite(h0):
        h0 = min(1.0, end / 16.0)
    if not 0.0 < h0 < end:
        raise ValidationError(f"need 0 < handoff < end, got handoff={h0}, end={end}")

    # The constant solution psi == psi0 is unstable: if the seed's
    # correction at the handoff is below float resolution, the march
    # would start exactly on it and roundoff would pick the sign of the
    # growing mode.  Happens for large steps (lambda -> 1, Delta >> 1).
    if any(c != 0.0 for c in seed.coeffs):
        min_dec = 1e-12 * abs(seed.psi0)
        if handoff is None:
            cap = 0.6 * seed.radius_est
            while abs(seed.eval(h0) - seed.psi0) < min_dec and h0 * 1.25 <= cap:
                h0 *= 1.25
        if abs(seed.eval(h0) - seed.psi0) < min_dec:
            raise ValidationError(
                f"seed correction at handoff {h0:.4g} is below float resolution "
                f"of the plateau psi0={seed.psi0:.6g}; seed later (larger handoff) "
                "or the march cannot leave the unstable constant solution")

    eq = problem.coeffs
    quad, delayed = eq.quad, eq.delayed
    if eq.ratio >= 1.0:
        # degenerate probe: the delayed argument equals the current one
        quad, delayed = quad + delayed, 0.0

    status, stop, arrays, nfev = march_core(
        quad, delayed, eq.linear, eq.ratio, eq.inv_u,
        seed.psi0, seed.step, np.asarray(seed.coeffs, dtype=float),
        h0, float(end), _stepping_rtol(tol), 0.0, floor, max_steps)
    t0s, hs, y0s, q0s, q1s, q2s, q3s = arrays

    sol = SampledSolution(problem=problem, seed=seed, handoff=h0,
                          t0s=t0s, hs=hs, y0s=y0s,
                          q0s=q0s, q1s=q1s, q2s=q2s, q3s=q3s,
                          front=float(stop if status != 1 else t0s[-1] + hs[-1]),
                          decayed=(status == 2), tol=tol, nfev=nfev)
    if status == 1:
        raise NegativeCrossing(stop, solution=sol)
    if status == 3:
        raise NumericalError(f"step budget {max_steps} exhausted at u={stop}")
    if status == 4:
        raise NumericalError(f"step size underflow at u={stop}")

    resid = _residual_max(sol)
    if resid > 100.0 * tol:
        raise ResidualBlowup(f"integral-form residual {resid:.3e} exceeds 100*tol="
                             f"{100.0 * tol:.3e}; the stored interpolant is inadequate "
                             "(deep non-gelling decay needs a looser tol or higher floor)")
    object.__setattr__(sol, "residual_max", resid)
    return sol


# ---------------------------------------------------------------------------
# integral-form residual


def _integrate(sol: SampledSolution, f, lo: float, hi: float) -> float:
    """Integrate f(w) over [lo, hi], split at stored step boundaries,
    fixed 7-point Gauss-Legendre per piece (exact for the dense quartics
    squared up to the 1/w weight)."""
    if hi <= lo:
        return 0.0
    cuts = [lo]
    inner = sol.t0s[(sol.t0s > lo) & (sol.t0s < hi)]
    if lo < sol.handoff < hi:
        inner = np.append(inner, sol.handoff)
    cuts.extend(np.sort(inner))
    cuts.append(hi)
    cuts = np.asarray(cuts)
    a, b = cuts[:-1], cuts[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    w = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = f(w).reshape(len(a), -1)
    return float(np.sum(half * (vals * _GL_WEIGHTS[None, :]).sum(axis=1)))


def _residual_at(sol: SampledSolution, u: float) -> float:
    eq = sol.problem.coeffs
    lam = sol.problem.lam
    reg = sol.problem.regime
    psi = sol.eval
    if reg is Regime.NON_GELLING:
        lhs = (1.0 - lam) * u * psi(u)
        rhs = _integrate(sol, lambda w: psi(w) ** 2, eq.ratio * u, u)
        scale = max(abs(lhs), abs(rhs))
    elif reg is Regime.MARGINAL:
        psi0 = sol.seed.psi0
        const = psi0 - psi0 * psi0 * LN2
        lhs = psi(u)
        rhs = const + _integrate(sol, lambda w: psi(w) ** 2 / w, 0.5 * u, u)
        scale = max(abs(lhs), abs(rhs))
    else:
        beta = -eq.delayed
        if eq.ratio >= 1.0:
            # degenerate probe, plain ODE: base the check at the handoff
            base = sol.handoff
            lhs = psi(u) - psi(base)
            rhs = _integrate(sol, lambda w: (eq.quad + eq.delayed) * psi(w) ** 2, base, u)
            scale = max(abs(psi(base)), abs(lhs), abs(rhs))
        else:
            base = eq.ratio * u
            lhs = psi(u) - psi(base)
            rhs = _integrate(sol, lambda w: psi(w) ** 2 - beta * psi(eq.ratio * w) ** 2,
                             base, u)
            scale = max(abs(psi(base)), abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0
    return abs(lhs - rhs) / scale


def _residual_max(sol: SampledSolution, n: int = _N_RESIDUAL_CHECKPOINTS) -> float:
    lo = sol.handoff * 1.0000001
    hi = sol.front * 0.9999999
    if hi <= lo:
        return 0.0
    cps = np.geomspace(lo, hi, n)
    return max(_residual_at(sol, float(u)) for u in cps)


# ---------------------------------------------------------------------------
# decay bound and tail fit


@dataclass(frozen=True)
class DecayBoundReport:
    max_violation: float
    location: float
    n_points: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= 1e-10


def check_decay_bound(solution: SampledSolution, n: int = 512) -> DecayBoundReport:
    """Check the regime's squared-history decay inequality pointwise.

    Non-gelling: psi(u) <= psi(ratio*u)**2 / psi0.  Marginal:
    psi(x) <= ln2 * psi(x/2)**2.  Violations are reported, not raised.
    """
    reg = solution.problem.regime
    if reg is Regime.GELLING:
        raise RegimeViolation("no pointwise decay bound is defined for the gelling regime")
    if solution.delay_intervals_covered < 5.0:
        raise ValidationError("solution must cover at least 5 delay intervals")
    ratio = solution.problem.coeffs.ratio
    us = np.unique(np.concatenate([
        np.geomspace(solution.handoff * 1.000001, solution.front * 0.999999, n),
        solution.t0s[1:],
    ]))
    psi_u = solution.eval(us)
    psi_d = solution.eval(ratio * us)
    if reg is Regime.NON_GELLING:
        bound = psi_d**2 / solution.seed.psi0
    else:
        bound = LN2 * psi_d**2
    v = psi_u - bound
    i = int(np.argmax(v))
    return DecayBoundReport(max_violation=float(v[i]), location=float(us[i]),
                            n_points=len(us))


def loglinear_decay_fit(x: np.ndarray, psi: np.ndarray) -> tuple[float, float]:
    """Least-squares fit log psi = const - rate * x; returns (rate, R^2)."""
    x = np.asarray(x, dtype=float)
    logp = np.log(np.asarray(psi, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, logp, rcond=None)
    pred = A @ coef
    sstot = float(np.sum((logp - logp.mean()) ** 2))
    ssres = float(np.sum((logp - pred) ** 2))
    r2 = 1.0 - ssres / sstot if sstot > 0.0 else 0.0
    return -float(coef[0]), r2


def fit_exponential_tail(solution: SampledSolution, n: int = 600,
                         decades: float = 6.0) -> tuple[float, float]:
    """Fit log psi against the physical variable x over the last decades.

    Precondition: the solution decayed to its floor or spans at least six
    decades; otherwise :class:`InsufficientDecay`.
    """
    us = np.geomspace(solution.handoff * 1.000001, solution.front * 0.999999, n)
    psi = solution.eval(us)
    ok = psi > 0.0
    us, psi = us[ok], psi[ok]
    if len(psi) < 8:
        raise InsufficientDecay("too few positive samples for a tail fit")
    pmin = float(psi.min())
    span = float(psi.max()) / pmin
    if not solution.decayed and span < 10.0**decades:
        raise InsufficientDecay(
            f"solution spans {math.log10(span):.2f} decades and never hit its decay "
            f"floor; need >= {decades} decades for a tail fit")
    window = psi <= pmin * 10.0**decades
    x = solution.problem.varmap.to_physical(us[window])
    return loglinear_decay_fit(x, psi[window])


# ---------------------------------------------------------------------------
# export


def solution_table(solution: SampledSolution, n: int = 512) -> np.ndarray:
    """Log-spaced checkpoint table with fields var, psi, x, phi."""
    us = np.geomspace(solution.handoff * 1e-3, solution.front, n)
    psi = solution.eval(us)
    vm = solution.problem.varmap
    x = vm.to_physical(us)
    phi = x ** (-vm.prefactor_exponent) * psi
    out = np.empty(n, dtype=[("var", float), ("psi", float), ("x", float), ("phi", float)])
    out["var"], out["psi"], out["x"], out["phi"] = us, psi, x, phi
    return out


def write_solution_csv(path: str, solution: SampledSolution, n: int = 512,
                       header_lines: list[str] | None = None) -> None:
    """CSV export: '#' comment header, then var,psi,x,phi rows at 17
    significant digits."""
    rows = solution_table(solution, n)
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("var,psi,x,phi\n")
        for r in rows:
            fh.write(f"{r['var']:.17g},{r['psi']:.17g},{r['x']:.17g},{r['phi']:.17g}\n")
