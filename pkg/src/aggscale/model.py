"""Domain types for the diagonal-kernel scaling problem.

The three regimes share one algebraic frame.  With a regime-dependent pair
of exponents (p, q) the substitution

    u = x**p / p,        Phi(x) = x**(-q) * psi(u)

turns the scaling equation into a pantograph equation for psi in the
transformed variable u, where the delayed argument x/2 becomes ratio*u with
ratio = 2**(-p):

    regime        p            q        transformed variable
    non-gelling   1 - lambda   1+lambda y
    gelling       1+lambda-tau tau      zeta
    marginal      1            2        x itself

The pantograph right side is always of the form

    psi'(u) = (A*psi(u)**2 + B*psi(ratio*u)**2 + C*psi(u)) * (1/u or 1),

captured by :class:`EqCoeffs`.  All types are immutable after construction
and safe to share across threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import OutOfDomain, RegimeViolation

__all__ = [
    "Regime",
    "ScalingConstants",
    "VariableMap",
    "EqCoeffs",
    "ScalingProblem",
    "make_problem",
    "phi_from_psi",
]


class Regime(enum.Enum):
    NON_GELLING = "non-gelling"
    MARGINAL = "marginal"
    GELLING = "gelling"


@dataclass(frozen=True)
class VariableMap:
    """Substitution record u = x**p / p with prefactor Phi = x**(-q) psi."""

    power: float
    prefactor_exponent: float

    def to_transformed(self, x: float) -> float:
        return x**self.power / self.power

    def to_physical(self, u: float) -> float:
        return (self.power * u) ** (1.0 / self.power)

    @property
    def ratio(self) -> float:
        """Delay factor in the transformed variable for the x -> x/2 delay."""
        return 2.0 ** (-self.power)


@dataclass(frozen=True)
class ScalingConstants:
    """Derived constants attached to a validated problem.

    psi0   plateau value of psi at the origin
    delta  correction exponent: root of the transcendental equation for
           lambda < 1, the series step 1 for the marginal default family,
           and sigma = 1+lambda-tau (the x-space correction) when gelling
    ratio  delayed-argument factor in the transformed variable, in (0, 1]
    z      growth exponent 1/(1-lambda)  (non-gelling only)
    sigma  1+lambda-tau                  (gelling only)
    """

    psi0: float
    delta: float
    ratio: float
    z: float | None = None
    sigma: float | None = None


@dataclass(frozen=True)
class EqCoeffs:
    """psi'(u) = (quad*psi^2 + delayed*psi(ratio*u)^2 + linear*psi) * w(u)."""

    quad: float
    delayed: float
    linear: float
    ratio: float
    inv_u: bool


@dataclass(frozen=True)
class ScalingProblem:
    """One member of the scaling-solution family.

    Built through :func:`make_problem`, which enforces the physical windows.
    Direct construction bypasses validation and is reserved for internal
    probes (the degenerate tau = lambda+1 bracket endpoint in ``shoot``).
    """

    lam: float
    regime: Regime
    c: float | None = None
    tau: float | None = None
    a1: float | None = None

    @property
    def varmap(self) -> VariableMap:
        if self.regime is Regime.NON_GELLING:
            return VariableMap(1.0 - self.lam, 1.0 + self.lam)
        if self.regime is Regime.GELLING:
            sigma = 1.0 + self.lam - self.tau
            return VariableMap(sigma, self.tau)
        return VariableMap(1.0, 2.0)

    @property
    def constants(self) -> ScalingConstants:
        from .roots import solve_delta_nongel

        if self.regime is Regime.NON_GELLING:
            rho = 2.0 ** (self.lam - 1.0)
            psi0 = (1.0 - self.lam) / (1.0 - rho)
            delta = solve_delta_nongel(self.lam).value
            return ScalingConstants(psi0=psi0, delta=delta, ratio=rho,
                                    z=1.0 / (1.0 - self.lam))
        if self.regime is Regime.GELLING:
            sigma = 1.0 + self.lam - self.tau
            return ScalingConstants(psi0=1.0, delta=sigma,
                                    ratio=2.0 ** (self.tau - self.lam - 1.0),
                                    sigma=sigma)
        return ScalingConstants(psi0=1.0, delta=1.0, ratio=0.5)

    @property
    def coeffs(self) -> EqCoeffs:
        if self.regime is Regime.NON_GELLING:
            p = 1.0 - self.lam
            rho = 2.0 ** (self.lam - 1.0)
            return EqCoeffs(quad=1.0 / p, delayed=-rho / p, linear=-1.0,
                            ratio=rho, inv_u=True)
        if self.regime is Regime.GELLING:
            return EqCoeffs(quad=1.0,
                            delayed=-(2.0 ** (2.0 * self.tau - self.lam - 3.0)),
                            linear=0.0,
                            ratio=2.0 ** (self.tau - self.lam - 1.0),
                            inv_u=False)
        return EqCoeffs(quad=1.0, delayed=-1.0, linear=0.0, ratio=0.5, inv_u=True)


def make_problem(lam: float, family_param: float) -> ScalingProblem:
    """Validate and build a ScalingProblem.

    ``family_param`` is interpreted per regime: c if lambda < 1, tau if
    lambda > 1, a1 if lambda == 1.  Raises :class:`RegimeViolation` outside
    the physical windows.
    """
    if not math.isfinite(lam) or not math.isfinite(family_param):
        raise RegimeViolation("lambda and the family parameter must be finite")
    if lam < 1.0:
        if family_param <= 0.0:
            raise RegimeViolation(f"non-gelling family constant c must be > 0, got {family_param}")
        return ScalingProblem(lam=lam, regime=Regime.NON_GELLING, c=family_param)
    if lam == 1.0:
        # a1 = 0 is admitted as the constant boundary member psi == 1.
        if family_param > 0.0:
            raise RegimeViolation(f"marginal family needs a1 <= 0, got {family_param}")
        return ScalingProblem(lam=lam, regime=Regime.MARGINAL, a1=family_param)
    tau = family_param
    lo, hi = (lam + 3.0) / 2.0, lam + 1.0
    if not lo < tau < hi:
        raise RegimeViolation(
            f"gelling exponent tau={tau} outside the open window ({lo}, {hi}); "
            f"tau={hi} is the exact algebraic-tail solution and is excluded")
    return ScalingProblem(lam=lam, regime=Regime.GELLING, tau=tau)


def phi_from_psi(problem: ScalingProblem, solution, x: float) -> float:
    """Evaluate Phi(x) = x**(-q) * psi(u(x)) from a sampled solution.

    ``solution`` must expose ``covers(u)`` and scalar evaluation; a
    :class:`pantograph.SampledSolution` does.  Raises OutOfDomain when x
    maps beyond the marched range.
    """
    if x <= 0.0:
        raise OutOfDomain(f"x must be positive, got {x}")
    vm = problem.varmap
    u = vm.to_transformed(x)
    if not solution.covers(u):
        raise OutOfDomain(f"x={x} maps to {u}, beyond the marched range")
    return x ** (-vm.prefactor_exponent) * float(solution.eval(u))
