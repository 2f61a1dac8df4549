import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import aggscale as ag


@pytest.fixture(scope="session")
def tau_search_lam2():
    """The lambda=2 critical-exponent search, shared across modules."""
    return ag.find_tau(2.0, tol_tau=1e-7, horizon=1e3, march_tol=1e-11)


def _nongel_solution(lam: float, floor_frac: float, tol: float = 1e-8):
    prob = ag.make_problem(lam, 1.0)
    delta = ag.solve_delta_nongel(lam).value
    seed = ag.nongel_series(lam, delta, -1.0, 20)
    sol = ag.march(prob, seed, 1e3, tol=tol,
                   floor=prob.constants.psi0 * floor_frac,
                   handoff=seed.radius_est / 8.0)
    return prob, sol


@pytest.fixture(scope="session")
def nongel_deep():
    """Deep marches (floor 1e-8 psi0) for lambda in {0, 0.5}."""
    return {lam: _nongel_solution(lam, 1e-8) for lam in (0.0, 0.5)}


@pytest.fixture(scope="session")
def nongel_shallow():
    """Clean-region marches (floor 1e-4 psi0) for lambda in {0, 0.5}."""
    return {lam: _nongel_solution(lam, 1e-4) for lam in (0.0, 0.5)}


@pytest.fixture(scope="session")
def marginal_solution():
    prob = ag.make_problem(1.0, -1.0)
    seed = ag.marginal_series(-1.0, 20)
    sol = ag.march(prob, seed, 2000.0, tol=1e-10)
    return prob, sol


@pytest.fixture(scope="session")
def kinetics_lam0():
    return ag.simulate(0.0, 60, 1e6, tol=1e-10)


@pytest.fixture(scope="session")
def collapse_chain():
    """lambda=0.5 kinetics run, scaling solution and collapse report."""
    states = ag.simulate(0.5, 60, 1e3, tol=1e-10, n_snapshots=12)
    prob, sol = _nongel_solution(0.5, 1e-8)
    report = ag.collapse(states, sol, (0.3, 1e3))
    return states, sol, report
