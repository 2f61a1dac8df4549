"""Pure-Python pantograph stepping core.

Dormand-Prince 5(4) with the standard quartic continuous extension.  The
delayed argument ratio*u is kept behind the integration front by capping
each step at u*(1/ratio - 1), so every history lookup lands either in the
seed series or in an already-stored step polynomial.  This is the
fallback twin of the compiled core in ``_march_c.pyx``; the two implement
the identical algorithm and must produce the same step sequence.

Status codes: 0 reached end, 1 crossed zero (stop = refined location),
2 decayed below floor, 3 step budget exhausted, 4 step size underflow.
"""
from __future__ import annotations

from bisect import bisect_right

import numpy as np

BACKEND = "python"

# Dormand-Prince 5(4) tableau and dense-output matrix.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_GROWTH = 5.0  # relative per-step growth cap, keeps the record log-dense


def march_core(quad, delayed, linear, ratio, inv_u,
               seed_psi0, seed_step, seed_coeffs,
               u0, end, rtol, atol, floor, max_steps):
    """March psi from u0 to end; returns (status, stop, arrays, nfev)."""
    coeffs = list(seed_coeffs)

    t0s: list[float] = []
    hs: list[float] = []
    y0s: list[float] = []
    q0s: list[float] = []
    q1s: list[float] = []
    q2s: list[float] = []
    q3s: list[float] = []

    def seed_eval(u):
        t = u**seed_step
        acc = 0.0
        for c in reversed(coeffs):
            acc = t * (c + acc)
        return seed_psi0 + acc

    def history(w):
        if w <= u0:
            return seed_eval(w)
        i = bisect_right(t0s, w) - 1
        th = (w - t0s[i]) / hs[i]
        if th > 1.0:
            th = 1.0
        return y0s[i] + hs[i] * th * (q0s[i] + th * (q1s[i] + th * (q2s[i] + th * q3s[i])))

    nfev = 0

    def rhs(u, y):
        nonlocal nfev
        nfev += 1
        if delayed != 0.0:
            hv = history(ratio * u)
            v = quad * y * y + delayed * hv * hv + linear * y
        else:
            v = quad * y * y + linear * y
        return v / u if inv_u else v

    if ratio < 1.0 and delayed != 0.0:
        cap_factor = (1.0 - ratio) / ratio * 0.999999
        if cap_factor > _MAX_GROWTH:
            cap_factor = _MAX_GROWTH
    else:
        cap_factor = _MAX_GROWTH

    t = u0
    y = seed_eval(u0)
    k1 = rhs(t, y)

    # initial step from the local derivative scale
    d0, d1 = abs(y), abs(k1)
    h = 0.01 * d0 / d1 if d1 > 1e-280 * d0 else t * 1e-3
    h = min(h, t * cap_factor, end - t)
    if h <= 0.0:
        h = (end - t) * 1e-6

    status = 0
    stop = end
    nsteps = 0
    rejected = False

    while True:
        if t >= end * (1.0 - 1e-15):
            status = 0
            stop = t
            break
        if nsteps >= max_steps:
            status = 3
            stop = t
            break
        if h <= t * 1e-15:
            status = 4
            stop = t
            break

        k2 = rhs(t + _C2 * h, y + h * (_A21 * k1))
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y1 = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(t + h, y1)

        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * max(abs(y), abs(y1))
        enorm = abs(err) / scale if scale > 0.0 else 0.0

        if enorm <= 1.0:
            q0 = (_P[0][0] * k1 + _P[2][0] * k3 + _P[3][0] * k4
                  + _P[4][0] * k5 + _P[5][0] * k6 + _P[6][0] * k7)
            q1 = (_P[0][1] * k1 + _P[2][1] * k3 + _P[3][1] * k4
                  + _P[4][1] * k5 + _P[5][1] * k6 + _P[6][1] * k7)
            q2 = (_P[0][2] * k1 + _P[2][2] * k3 + _P[3][2] * k4
                  + _P[4][2] * k5 + _P[5][2] * k6 + _P[6][2] * k7)
            q3 = (_P[0][3] * k1 + _P[2][3] * k3 + _P[3][3] * k4
                  + _P[4][3] * k5 + _P[5][3] * k6 + _P[6][3] * k7)
            t0s.append(t)
            hs.append(h)
            y0s.append(y)
            q0s.append(q0)
            q1s.append(q1)
            q2s.append(q2)
            q3s.append(q3)
            nsteps += 1

            mid = y + h * 0.5 * (q0 + 0.5 * (q1 + 0.5 * (q2 + 0.5 * q3)))
            if y1 < 0.0 or mid < 0.0:
                status = 1
                stop = _refine_crossing(t, h, y, q0, q1, q2, q3)
                break
            t_new = t + h
            if 0.0 < y1 < floor:
                status = 2
                stop = t_new
                t = t_new
                break

            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * enorm**-0.2)
            if rejected:
                factor = min(factor, 1.0)
            rejected = False
            t = t_new
            y = y1
            k1 = k7
            h = min(h * max(factor, _MIN_FACTOR), t * cap_factor, end - t)
        else:
            rejected = True
            h = max(h * max(_MIN_FACTOR, _SAFETY * enorm**-0.2), t * 1e-15)

    arrays = (np.asarray(t0s), np.asarray(hs), np.asarray(y0s),
              np.asarray(q0s), np.asarray(q1s), np.asarray(q2s), np.asarray(q3s))
    return status, stop, arrays, nfev


def _refine_crossing(t, h, y0, q0, q1, q2, q3):
    """Bisect the dense polynomial for its first zero within the step."""
    def dense(th):
        return y0 + h * th * (q0 + th * (q1 + th * (q2 + th * q3)))

    lo, hi = 0.0, 1.0
    if dense(0.5) < 0.0:
        hi = 0.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dense(mid) < 0.0:
            hi = mid
        else:
            lo = mid
        if (hi - lo) * h <= 1e-12 * (t + hi * h):
            break
    return t + 0.5 * (lo + hi) * h
