"""Transcendental root solvers for the correction exponent Delta.

Non-gelling case:  (1+Delta)/2 = F(Delta) with
    F(D) = (1 - 2**((lambda-1)(D+1))) / (1 - 2**(lambda-1)),
which has exactly one positive root, known to exceed 1 (F is concave and
F(D) > 1 for D > 0).  Marginal alternative family:
    Delta / (2 (1 - 2**(-Delta))) = psi0,
whose left side increases from 1/(2 ln 2), so a positive root exists iff
psi0 exceeds that limit.

Both solvers bracket first (doubling the upper end until a sign change)
and then refine with a Newton/bisection hybrid: a Newton step is accepted
only if it lands inside the current bracket, otherwise the step is a
bisection.  F is evaluated through expm1 so the lambda -> 1 limit stays
well conditioned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BelowLimit, NoBracket, RegimeViolation

__all__ = ["RootResult", "solve_delta_nongel", "solve_delta_marginal", "PSI0_MARGINAL_LIMIT"]

LN2 = math.log(2.0)
PSI0_MARGINAL_LIMIT = 1.0 / (2.0 * LN2)

_RESIDUAL_TOL = 1e-12
_MAX_BRACKET = 2.0**20


@dataclass(frozen=True)
class RootResult:
    value: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


def nongel_characteristic(lam: float, delta: float) -> float:
    """F(Delta) - (1+Delta)/2; positive left of the root, negative right."""
    a = (lam - 1.0) * LN2
    F = math.expm1(a * (delta + 1.0)) / math.expm1(a)
    return F - 0.5 * (1.0 + delta)


def _nongel_dg(lam: float, delta: float) -> float:
    a = (lam - 1.0) * LN2
    return a * math.exp(a * (delta + 1.0)) / math.expm1(a) - 0.5


def marginal_characteristic(psi0: float, delta: float) -> float:
    """Delta/(2(1-2**-Delta)) - psi0; negative left of the root."""
    return delta / (2.0 * (-math.expm1(-delta * LN2))) - psi0


def _marginal_dg(delta: float) -> float:
    e = -math.expm1(-delta * LN2)  # 1 - 2^-Delta
    return (e - delta * LN2 * (1.0 - e)) / (2.0 * e * e)


def _hybrid(g, dg, lo: float, hi: float) -> tuple[float, tuple[float, float], int]:
    """Newton/bisection hybrid on a bracket with a sign change of g.

    Returns (root, final_bracket, iterations).  A Newton step is taken only
    when it stays strictly inside the current bracket.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo, (lo, lo), 0
    if ghi == 0.0:
        return hi, (hi, hi), 0
    x = 0.5 * (lo + hi)
    it = 0
    while it < 200:
        it += 1
        gx = g(x)
        if gx == 0.0:
            lo = hi = x
            break
        if (gx > 0.0) == (glo > 0.0):
            lo, glo = x, gx
        else:
            hi, ghi = x, gx
        if abs(hi - lo) <= 1e-15 * max(1.0, abs(x)) and abs(gx) <= _RESIDUAL_TOL:
            break
        d = dg(x)
        x_new = x - gx / d if d != 0.0 else x
        if not min(lo, hi) < x_new < max(lo, hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    return x, (min(lo, hi), max(lo, hi)), it


def solve_delta_nongel(lam: float) -> RootResult:
    """Unique positive root of the non-gelling transcendental equation.

    Requires lambda < 1; the returned Delta always exceeds 1.
    """
    if not lam < 1.0:
        raise RegimeViolation(f"solve_delta_nongel needs lambda < 1, got {lam}")
    g = lambda d: nongel_characteristic(lam, d)
    dg = lambda d: _nongel_dg(lam, d)
    lo, hi = 1e-12, 2.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > _MAX_BRACKET:
            raise NoBracket(f"no sign change of the characteristic up to Delta={_MAX_BRACKET}")
    root, bracket, it = _hybrid(g, dg, lo, hi)
    return RootResult(value=root, residual=abs(g(root)), bracket=bracket, iterations=it)


def solve_delta_marginal(psi0: float) -> RootResult:
    """Root of the marginal alternative-family equation for a given psi0."""
    if psi0 <= PSI0_MARGINAL_LIMIT:
        raise BelowLimit(
            f"psi0={psi0} is at or below the Delta->0 limit 1/(2 ln 2) ~ {PSI0_MARGINAL_LIMIT:.6f}; "
            "the alternative family has no positive root there")
    g = lambda d: marginal_characteristic(psi0, d)
    dg = _marginal_dg
    lo, hi = 1e-12, 2.0
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > _MAX_BRACKET:
            raise NoBracket(f"no sign change of the characteristic up to Delta={_MAX_BRACKET}")
    root, bracket, it = _hybrid(g, dg, lo, hi)
    return RootResult(value=root, residual=abs(g(root)), bracket=bracket, iterations=it)
