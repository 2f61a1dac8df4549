"""Benchmark the compiled stepping core against the pure-Python twin.

Runs the same marches through both backends and prints wall times plus
the speedup.  The two cores are algorithmically identical (bit-identical
step sequences), so this measures implementation overhead only.

Usage: python benchmarks/bench_march.py [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

import aggscale as ag
from aggscale._march_c import march_core as core_c  # fails fast if not built
from aggscale._march_py import march_core as core_py


def _cases():
    gel = ag.gel_series(2.0, 2.6, 20)
    eq26 = ag.make_problem(2.0, 2.6).coeffs
    yield ("gel lam=2 tau=2.6 to zeta=1e3, rtol=5e-14",
           (eq26.quad, eq26.delayed, eq26.linear, eq26.ratio, eq26.inv_u,
            gel.psi0, gel.step, np.asarray(gel.coeffs),
            gel.handoff, 1e3, 5e-14, 0.0, 1e-300, 2_000_000))

    tau_near = 2.55428873
    eqn = ag.make_problem(2.0, tau_near).coeffs
    near = ag.gel_series(2.0, tau_near, 20)
    yield ("gel lam=2 near-critical tau to zeta=1e3",
           (eqn.quad, eqn.delayed, eqn.linear, eqn.ratio, eqn.inv_u,
            near.psi0, near.step, np.asarray(near.coeffs),
            near.handoff, 1e3, 5e-14, 0.0, 1e-300, 2_000_000))

    d = ag.solve_delta_nongel(0.5).value
    ng = ag.nongel_series(0.5, d, -1.0, 20)
    eq5 = ag.make_problem(0.5, 1.0).coeffs
    yield ("nongel lam=0.5 to floor 1e-8*psi0",
           (eq5.quad, eq5.delayed, eq5.linear, eq5.ratio, eq5.inv_u,
            ng.psi0, ng.step, np.asarray(ng.coeffs),
            ng.radius_est / 8.0, 1e3, 5e-14, 0.0, 1.7071e-8, 2_000_000))

    mg = ag.marginal_series(-1.0, 20)
    eqm = ag.make_problem(1.0, -1.0).coeffs
    yield ("marginal a1=-1 to x=2e3",
           (eqm.quad, eqm.delayed, eqm.linear, eqm.ratio, eqm.inv_u,
            mg.psi0, mg.step, np.asarray(mg.coeffs),
            mg.handoff, 2e3, 5e-14, 0.0, 1e-300, 2_000_000))


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    opts = ap.parse_args()

    print(f"{'case':<45} {'steps':>7} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, args in _cases():
        tp, rp = _time(core_py, args, opts.repeat)
        tc, rc = _time(core_c, args, opts.repeat)
        same = all(np.array_equal(a, b) for a, b in zip(rp[2], rc[2]))
        steps = len(rp[2][0])
        flag = "" if same else "  [MISMATCH]"
        print(f"{name:<45} {steps:>7} {tp * 1e3:>9.1f}ms {tc * 1e3:>9.1f}ms "
              f"{tp / tc:>7.1f}x{flag}")


if __name__ == "__main__":
    main()
