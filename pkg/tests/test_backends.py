"""The compiled and pure-Python stepping cores must agree bit for bit."""
import numpy as np
import pytest

import aggscale as ag
import aggscale._march_py as march_py

try:
    import aggscale._march_c as march_c
except ImportError:
    march_c = None

needs_compiled = pytest.mark.skipif(march_c is None,
                                    reason="compiled core not built")


def _args_gel():
    seed = ag.gel_series(2.0, 2.6, 20)
    eq = ag.make_problem(2.0, 2.6).coeffs
    return (eq.quad, eq.delayed, eq.linear, eq.ratio, eq.inv_u,
            seed.psi0, seed.step, np.asarray(seed.coeffs),
            seed.handoff, 1e3, 1e-12, 0.0, 1e-300, 2_000_000)


def _args_crossing():
    seed = ag.gel_series(2.0, 2.52, 20)
    eq = ag.make_problem(2.0, 2.52).coeffs
    return (eq.quad, eq.delayed, eq.linear, eq.ratio, eq.inv_u,
            seed.psi0, seed.step, np.asarray(seed.coeffs),
            seed.handoff, 1e4, 1e-12, 0.0, 1e-300, 2_000_000)


def _args_nongel():
    d = ag.solve_delta_nongel(0.5).value
    seed = ag.nongel_series(0.5, d, -1.0, 20)
    eq = ag.make_problem(0.5, 1.0).coeffs
    psi0 = ag.make_problem(0.5, 1.0).constants.psi0
    return (eq.quad, eq.delayed, eq.linear, eq.ratio, eq.inv_u,
            seed.psi0, seed.step, np.asarray(seed.coeffs),
            seed.radius_est / 8.0, 1e3, 1e-13, 0.0, psi0 * 1e-8, 2_000_000)


@needs_compiled
@pytest.mark.parametrize("case", [_args_gel, _args_crossing, _args_nongel])
def test_cores_bit_identical(case):
    args = case()
    s1, stop1, arrays1, nfev1 = march_py.march_core(*args)
    s2, stop2, arrays2, nfev2 = march_c.march_core(*args)
    assert s1 == s2
    assert stop1 == stop2
    assert nfev1 == nfev2
    for a, b in zip(arrays1, arrays2):
        assert np.array_equal(a, b)


def test_backend_name_exposed():
    assert ag.BACKEND in ("compiled", "python")
