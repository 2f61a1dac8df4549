"""Truncated local power series for psi near the origin, all three regimes.

Substituting the regime ansatz into the pantograph equation and matching
powers of the transformed variable gives closed coefficient recursions:

  non-gelling, psi = psi0 + sum c_n y**(n*Delta):
      c_n = (1 - rho**(1+n*Delta)) * Q_n / D_n,
      D_n = (1-lambda)(1+n*Delta) - 2 psi0 (1 - rho**(1+n*Delta)),
      Q_n = sum_{m=1}^{n-1} c_m c_{n-m},            rho = 2**(lambda-1);
  gelling, psi = sum a_k zeta**k with a_0 = 1:
      a_{k+1} = (1 - beta rho**k)/(k+1) * sum_{m=0}^{k} a_m a_{k-m},
      beta = 2**(2 tau - lambda - 3),               rho = 2**(tau-lambda-1);
  marginal, psi = 1 + sum a_k x**k:
      a_k (k - 2(1 - 2**-k)) = (1 - 2**-k) * sum_{m=1}^{k-1} a_m a_{k-m},
      with the k = 1 relation vanishing identically, so a_1 is free.

The order-1 relation of the non-gelling recursion is consistent only when
Delta solves the transcendental equation; a wrong Delta is rejected.
Coefficients are accumulated in 40-digit arithmetic (the factors
1 - rho**(...) subtract nearby quantities) and returned as floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp

from .errors import InconsistentDelta, RegimeViolation, TooFewTerms

__all__ = [
    "LocalSeries",
    "nongel_series",
    "gel_series",
    "marginal_series",
    "estimate_radius",
]

_DPS = 40
_MIN_TERMS_FOR_RADIUS = 8
_RADIUS_FIT_TAIL = 8  # how many trailing ratios enter the geometric fit


@dataclass(frozen=True)
class LocalSeries:
    """psi(u) ~ psi0 + sum_{n>=1} coeffs[n-1] * u**(n*step) near u = 0."""

    psi0: float
    step: float
    coeffs: tuple[float, ...]
    radius_est: float
    variable: str  # "y", "zeta" or "x"

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def handoff(self) -> float:
        """Evaluation cutoff used to seed the global march."""
        return self.radius_est / 4.0

    def eval(self, u):
        """Horner evaluation in t = u**step; accepts scalars or arrays."""
        import numpy as np

        t = np.asarray(u, dtype=float) ** self.step
        acc = np.zeros_like(t)
        for c in reversed(self.coeffs):
            acc = t * (c + acc)
        out = self.psi0 + acc
        return float(out) if out.ndim == 0 else out


def _radius_from_coeffs(coeffs, step: float) -> float:
    """Geometric tail estimate of the convergence radius.

    Coefficient magnitudes of these recursions often oscillate under a
    geometric envelope (complex singularity pairs), so the plain ratio
    |c_{n+1}/c_n| need not converge.  The limsup form max |c_n|**(1/n)
    over the tail tracks the envelope instead and errs on the small side,
    which is the safe direction for the seed handoff.
    """
    mags = [abs(c) for c in coeffs]
    if not any(m > 0.0 for m in mags):
        return math.inf
    tail = [(n + 1, m) for n, m in enumerate(mags) if m > 0.0][-(_RADIUS_FIT_TAIL + 1):]
    ratio = max(m ** (1.0 / n) for n, m in tail)  # envelope |c_n|^(1/n) in t = u**step
    if ratio <= 0.0:
        return math.inf
    return (1.0 / ratio) ** (1.0 / step)


def estimate_radius(series: LocalSeries) -> float:
    """Ratio-test convergence-radius estimate from the tail coefficients.

    Requires at least 8 terms; all-zero coefficient lists (the constant
    solution) return +inf.
    """
    if series.order < _MIN_TERMS_FOR_RADIUS:
        raise TooFewTerms(f"radius estimate needs >= {_MIN_TERMS_FOR_RADIUS} terms, "
                          f"got {series.order}")
    return _radius_from_coeffs(series.coeffs, series.step)


def nongel_series(lam: float, delta: float, c1: float, N: int) -> LocalSeries:
    """Coefficients c_2..c_N of the non-gelling local solution.

    ``delta`` must be the positive root from roots.solve_delta_nongel;
    anything else fails the order-1 matching and raises InconsistentDelta.
    ``c1`` is the free family parameter (Theorem 1's -c).
    """
    if not lam < 1.0:
        raise RegimeViolation(f"non-gelling series needs lambda < 1, got {lam}")
    if N < 1:
        raise RegimeViolation(f"series order must be >= 1, got {N}")
    with mp.workdps(_DPS):
        lam_ = mp.mpf(lam)
        d = mp.mpf(delta)
        rho = mp.mpf(2) ** (lam_ - 1)
        psi0 = (1 - lam_) / (1 - rho)
        lhs1 = (1 - lam_) * (1 + d)
        rhs1 = 2 * psi0 * (1 - rho ** (1 + d))
        if abs(lhs1 - rhs1) > 1e-8 * abs(lhs1):
            raise InconsistentDelta(
                f"delta={delta} fails the order-1 matching (relative residual "
                f"{float(abs(lhs1 - rhs1) / abs(lhs1)):.3e})")
        c = [mp.mpf(0), mp.mpf(c1)]
        for n in range(2, N + 1):
            q = mp.fsum(c[m] * c[n - m] for m in range(1, n))
            w = 1 - rho ** (1 + n * d)
            denom = (1 - lam_) * (1 + n * d) - 2 * psi0 * w
            c.append(w * q / denom)
        coeffs = tuple(float(x) for x in c[1:])
        psi0_f = float(psi0)
    return LocalSeries(psi0=psi0_f, step=float(delta), coeffs=coeffs,
                       radius_est=_radius_from_coeffs(coeffs, float(delta)),
                       variable="y")


def gel_series(lam: float, tau: float, N: int) -> LocalSeries:
    """Coefficients a_1..a_N of the gelling local solution, a_0 = 1."""
    lo, hi = (lam + 3.0) / 2.0, lam + 1.0
    if not lo < tau < hi:
        raise RegimeViolation(f"gelling series needs tau in ({lo}, {hi}), got {tau}")
    return _gel_series_unchecked(lam, tau, N)


def _gel_series_unchecked(lam: float, tau: float, N: int) -> LocalSeries:
    # Separate entry point: the shoot module seeds the degenerate
    # tau = lambda+1 probe, which the public window check rejects.
    if N < 1:
        raise RegimeViolation(f"series order must be >= 1, got {N}")
    with mp.workdps(_DPS):
        lam_, tau_ = mp.mpf(lam), mp.mpf(tau)
        rho = mp.mpf(2) ** (tau_ - lam_ - 1)
        beta = mp.mpf(2) ** (2 * tau_ - lam_ - 3)
        a = [mp.mpf(1)]
        for k in range(0, N):
            q = mp.fsum(a[m] * a[k - m] for m in range(0, k + 1))
            a.append((1 - beta * rho**k) * q / (k + 1))
        coeffs = tuple(float(x) for x in a[1:])
    return LocalSeries(psi0=1.0, step=1.0, coeffs=coeffs,
                       radius_est=_radius_from_coeffs(coeffs, 1.0),
                       variable="zeta")


def marginal_series(a1: float, N: int) -> LocalSeries:
    """Coefficients a_2..a_N of the marginal solution; a_1 is free.

    The recursion is consistent at every order, and a_1 = 0 forces the
    constant solution psi == 1 exactly.
    """
    if N < 1:
        raise RegimeViolation(f"series order must be >= 1, got {N}")
    with mp.workdps(_DPS):
        a = [mp.mpf(1), mp.mpf(a1)]
        for k in range(2, N + 1):
            q = mp.fsum(a[m] * a[k - m] for m in range(1, k))
            w = 1 - mp.mpf(2) ** (-k)
            a.append(w * q / (k - 2 * w))
        coeffs = tuple(float(x) for x in a[1:])
    return LocalSeries(psi0=1.0, step=1.0, coeffs=coeffs,
                       radius_est=_radius_from_coeffs(coeffs, 1.0),
                       variable="x")
