# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pantograph stepping core.

Mirror of ``_march_py.march_core``: Dormand-Prince 5(4) with quartic dense
output, step cap u*(1/ratio - 1) so history lookups stay behind the front.
The algorithm and constants must match the pure-Python twin exactly.
"""
from libc.math cimport fabs, pow as cpow
from libc.stdlib cimport free, malloc, realloc

import numpy as np

BACKEND = "compiled"

cdef double C2 = 1.0/5.0, C3 = 3.0/10.0, C4 = 4.0/5.0, C5 = 8.0/9.0
cdef double A21 = 1.0/5.0
cdef double A31 = 3.0/40.0, A32 = 9.0/40.0
cdef double A41 = 44.0/45.0, A42 = -56.0/15.0, A43 = 32.0/9.0
cdef double A51 = 19372.0/6561.0, A52 = -25360.0/2187.0, A53 = 64448.0/6561.0, A54 = -212.0/729.0
cdef double A61 = 9017.0/3168.0, A62 = -355.0/33.0, A63 = 46732.0/5247.0
cdef double A64 = 49.0/176.0, A65 = -5103.0/18656.0
cdef double B1 = 35.0/384.0, B3 = 500.0/1113.0, B4 = 125.0/192.0
cdef double B5 = -2187.0/6784.0, B6 = 11.0/84.0
cdef double E1 = 71.0/57600.0, E3 = -71.0/16695.0, E4 = 71.0/1920.0
cdef double E5 = -17253.0/339200.0, E6 = 22.0/525.0, E7 = -1.0/40.0

cdef double P00 = 1.0
cdef double P01 = -8048581381.0/2820520608.0
cdef double P02 = 8663915743.0/2820520608.0
cdef double P03 = -12715105075.0/11282082432.0
cdef double P20 = 0.0, P21 = 131558114200.0/32700410799.0
cdef double P22 = -68118460800.0/10900136933.0, P23 = 87487479700.0/32700410799.0
cdef double P30 = 0.0, P31 = -1754552775.0/470086768.0
cdef double P32 = 14199869525.0/1410260304.0, P33 = -10690763975.0/1880347072.0
cdef double P40 = 0.0, P41 = 127303824393.0/49829197408.0
cdef double P42 = -318862633887.0/49829197408.0, P43 = 701980252875.0/199316789632.0
cdef double P50 = 0.0, P51 = -282668133.0/205662961.0
cdef double P52 = 2019193451.0/616988883.0, P53 = -1453857185.0/822651844.0
cdef double P60 = 0.0, P61 = 40617522.0/29380423.0
cdef double P62 = -110615467.0/29380423.0, P63 = 69997945.0/29380423.0

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0
cdef double MAX_GROWTH = 5.0


cdef struct Record:
    double *t0
    double *h
    double *y0
    double *q0
    double *q1
    double *q2
    double *q3
    long n
    long cap


cdef int rec_init(Record *r, long cap) except -1:
    r.n = 0
    r.cap = cap
    r.t0 = <double *> malloc(cap * sizeof(double))
    r.h = <double *> malloc(cap * sizeof(double))
    r.y0 = <double *> malloc(cap * sizeof(double))
    r.q0 = <double *> malloc(cap * sizeof(double))
    r.q1 = <double *> malloc(cap * sizeof(double))
    r.q2 = <double *> malloc(cap * sizeof(double))
    r.q3 = <double *> malloc(cap * sizeof(double))
    if (r.t0 == NULL or r.h == NULL or r.y0 == NULL or r.q0 == NULL
            or r.q1 == NULL or r.q2 == NULL or r.q3 == NULL):
        raise MemoryError()
    return 0


cdef void rec_free(Record *r) noexcept:
    free(r.t0); free(r.h); free(r.y0)
    free(r.q0); free(r.q1); free(r.q2); free(r.q3)


cdef int rec_grow(Record *r) except -1:
    cdef long cap = r.cap * 2
    r.t0 = <double *> realloc(r.t0, cap * sizeof(double))
    r.h = <double *> realloc(r.h, cap * sizeof(double))
    r.y0 = <double *> realloc(r.y0, cap * sizeof(double))
    r.q0 = <double *> realloc(r.q0, cap * sizeof(double))
    r.q1 = <double *> realloc(r.q1, cap * sizeof(double))
    r.q2 = <double *> realloc(r.q2, cap * sizeof(double))
    r.q3 = <double *> realloc(r.q3, cap * sizeof(double))
    if (r.t0 == NULL or r.h == NULL or r.y0 == NULL or r.q0 == NULL
            or r.q1 == NULL or r.q2 == NULL or r.q3 == NULL):
        raise MemoryError()
    r.cap = cap
    return 0


cdef inline double seed_eval(double u, double psi0, double step,
                             double *cs, long ncs) noexcept:
    cdef double t = cpow(u, step)
    cdef double acc = 0.0
    cdef long i
    for i in range(ncs - 1, -1, -1):
        acc = t * (cs[i] + acc)
    return psi0 + acc


cdef inline double history(double w, double u0, double psi0, double step,
                           double *cs, long ncs, Record *r) noexcept:
    cdef long lo, hi, mid
    cdef double th
    if w <= u0:
        return seed_eval(w, psi0, step, cs, ncs)
    # rightmost record with t0 <= w
    lo = 0
    hi = r.n - 1
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if r.t0[mid] <= w:
            lo = mid
        else:
            hi = mid - 1
    th = (w - r.t0[lo]) / r.h[lo]
    if th > 1.0:
        th = 1.0
    return r.y0[lo] + r.h[lo] * th * (r.q0[lo] + th * (r.q1[lo] + th * (r.q2[lo] + th * r.q3[lo])))


cdef inline double eval_rhs(double u, double y, double quad, double delayed,
                            double linear, double ratio, bint inv_u,
                            double u0, double psi0, double step,
                            double *cs, long ncs, Record *r, long *nfev) noexcept:
    cdef double hv, v
    nfev[0] += 1
    if delayed != 0.0:
        hv = history(ratio * u, u0, psi0, step, cs, ncs, r)
        v = quad * y * y + delayed * hv * hv + linear * y
    else:
        v = quad * y * y + linear * y
    if inv_u:
        v /= u
    return v


cdef double refine_crossing(double t, double h, double y0,
                            double q0, double q1, double q2, double q3) noexcept:
    cdef double lo = 0.0, hi = 1.0, mid, val
    cdef int i
    val = y0 + h * 0.5 * (q0 + 0.5 * (q1 + 0.5 * (q2 + 0.5 * q3)))
    if val < 0.0:
        hi = 0.5
    for i in range(80):
        mid = 0.5 * (lo + hi)
        val = y0 + h * mid * (q0 + mid * (q1 + mid * (q2 + mid * q3)))
        if val < 0.0:
            hi = mid
        else:
            lo = mid
        if (hi - lo) * h <= 1e-12 * (t + hi * h):
            break
    return t + 0.5 * (lo + hi) * h


def march_core(double quad, double delayed, double linear, double ratio, bint inv_u,
               double seed_psi0, double seed_step, seed_coeffs,
               double u0, double end, double rtol, double atol, double floor,
               long max_steps):
    """March psi from u0 to end; returns (status, stop, arrays, nfev)."""
    cdef double[::1] cs_arr = np.ascontiguousarray(seed_coeffs, dtype=np.float64)
    cdef long ncs = cs_arr.shape[0]
    cdef double *cs = NULL
    if ncs > 0:
        cs = &cs_arr[0]

    cdef Record rec
    rec_init(&rec, 4096)

    cdef long nfev = 0
    cdef double cap_factor
    if ratio < 1.0 and delayed != 0.0:
        cap_factor = (1.0 - ratio) / ratio * 0.999999
        if cap_factor > MAX_GROWTH:
            cap_factor = MAX_GROWTH
    else:
        cap_factor = MAX_GROWTH

    cdef double t = u0
    cdef double y = seed_eval(u0, seed_psi0, seed_step, cs, ncs)
    cdef double k1 = eval_rhs(t, y, quad, delayed, linear, ratio, inv_u,
                              u0, seed_psi0, seed_step, cs, ncs, &rec, &nfev)
    cdef double k2, k3, k4, k5, k6, k7, y1, err, scale, enorm
    cdef double q0, q1, q2, q3, mid, factor, t_new, d0, d1, h

    d0 = fabs(y)
    d1 = fabs(k1)
    if d1 > 1e-280 * d0:
        h = 0.01 * d0 / d1
    else:
        h = t * 1e-3
    if h > t * cap_factor:
        h = t * cap_factor
    if h > end - t:
        h = end - t
    if h <= 0.0:
        h = (end - t) * 1e-6

    cdef int status = 0
    cdef double stop = end
    cdef long nsteps = 0
    cdef bint rejected = False
    cdef long n, i
    cdef double[::1] vt, vh, vy, v0, v1, v2, v3

    try:
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

            k2 = eval_rhs(t + C2 * h, y + h * (A21 * k1), quad, delayed, linear, ratio,
                          inv_u, u0, seed_psi0, seed_step, cs, ncs, &rec, &nfev)
            k3 = eval_rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2), quad, delayed, linear,
                          ratio, inv_u, u0, seed_psi0, seed_step, cs, ncs, &rec, &nfev)
            k4 = eval_rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), quad, delayed,
                          linear, ratio, inv_u, u0, seed_psi0, seed_step, cs, ncs, &rec, &nfev)
            k5 = eval_rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
                          quad, delayed, linear, ratio, inv_u, u0, seed_psi0, seed_step,
                          cs, ncs, &rec, &nfev)
            k6 = eval_rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
                          quad, delayed, linear, ratio, inv_u, u0, seed_psi0, seed_step,
                          cs, ncs, &rec, &nfev)
            y1 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = eval_rhs(t + h, y1, quad, delayed, linear, ratio, inv_u,
                          u0, seed_psi0, seed_step, cs, ncs, &rec, &nfev)

            err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            scale = fabs(y)
            if fabs(y1) > scale:
                scale = fabs(y1)
            scale = atol + rtol * scale
            enorm = fabs(err) / scale if scale > 0.0 else 0.0

            if enorm <= 1.0:
                q0 = P00 * k1 + P20 * k3 + P30 * k4 + P40 * k5 + P50 * k6 + P60 * k7
                q1 = P01 * k1 + P21 * k3 + P31 * k4 + P41 * k5 + P51 * k6 + P61 * k7
                q2 = P02 * k1 + P22 * k3 + P32 * k4 + P42 * k5 + P52 * k6 + P62 * k7
                q3 = P03 * k1 + P23 * k3 + P33 * k4 + P43 * k5 + P53 * k6 + P63 * k7
                if rec.n == rec.cap:
                    rec_grow(&rec)
                rec.t0[rec.n] = t
                rec.h[rec.n] = h
                rec.y0[rec.n] = y
                rec.q0[rec.n] = q0
                rec.q1[rec.n] = q1
                rec.q2[rec.n] = q2
                rec.q3[rec.n] = q3
                rec.n += 1
                nsteps += 1

                mid = y + h * 0.5 * (q0 + 0.5 * (q1 + 0.5 * (q2 + 0.5 * q3)))
                if y1 < 0.0 or mid < 0.0:
                    status = 1
                    stop = refine_crossing(t, h, y, q0, q1, q2, q3)
                    break
                t_new = t + h
                if 0.0 < y1 < floor:
                    status = 2
                    stop = t_new
                    t = t_new
                    break

                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * cpow(enorm, -0.2)
                    if factor > MAX_FACTOR:
                        factor = MAX_FACTOR
                if rejected and factor > 1.0:
                    factor = 1.0
                rejected = False
                t = t_new
                y = y1
                k1 = k7
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
                h = h * factor
                if h > t * cap_factor:
                    h = t * cap_factor
                if h > end - t:
                    h = end - t
            else:
                rejected = True
                factor = SAFETY * cpow(enorm, -0.2)
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
                h = h * factor
                if h < t * 1e-15:
                    h = t * 1e-15

        n = rec.n
        t0s = np.empty(n)
        hs = np.empty(n)
        y0s = np.empty(n)
        q0s = np.empty(n)
        q1s = np.empty(n)
        q2s = np.empty(n)
        q3s = np.empty(n)
        if n > 0:
            vt, vh, vy = t0s, hs, y0s
            v0, v1, v2, v3 = q0s, q1s, q2s, q3s
            for i in range(n):
                vt[i] = rec.t0[i]
                vh[i] = rec.h[i]
                vy[i] = rec.y0[i]
                v0[i] = rec.q0[i]
                v1[i] = rec.q1[i]
                v2[i] = rec.q2[i]
                v3[i] = rec.q3[i]
    finally:
        rec_free(&rec)

    return status, stop, (t0s, hs, y0s, q0s, q1s, q2s, q3s), nfev
