"""Dyadic kinetics: conservation, growth exponents, gelation, collapse."""
import math

import numpy as np
import pytest

import aggscale as ag
from aggscale.kinetics import _rescaled

LN2 = math.log(2.0)


def _fit_growth_exponent(states, t_min):
    ts = np.array([s.t for s in states if s.t >= t_min])
    ss = np.array([s.mean_mass for s in states if s.t >= t_min])
    return np.polyfit(np.log(ts), np.log(ss), 1)[0]


def test_mass_conservation_lam0(kinetics_lam0):
    states = kinetics_lam0
    err = max(abs(s.M1 + s.leaked_mass - 1.0) for s in states)
    assert err <= 1e-6
    # the front never reaches j_max here, so nothing leaks at all
    assert states[-1].leaked_mass == 0.0


def test_growth_exponent_lam0(kinetics_lam0):
    z = _fit_growth_exponent(kinetics_lam0, 1e5)
    assert z == pytest.approx(1.0, abs=0.1)


def test_growth_exponent_lam05():
    # z = 1/(1-lam) = 2; the approach is slow, so fit the last decade of
    # a run long enough to be in the scaling era (front still far from j_max)
    states = ag.simulate(0.5, 60, 1e5, tol=1e-10, n_snapshots=60)
    z = _fit_growth_exponent(states, 1e4)
    assert z == pytest.approx(2.0, abs=0.2)


def test_mean_mass_nondecreasing(kinetics_lam0):
    s = np.array([st.mean_mass for st in kinetics_lam0])
    assert np.all(np.diff(s) >= -1e-12)


def test_positivity(kinetics_lam0):
    assert min(st.c.min() for st in kinetics_lam0) >= -1e-10


def test_gelation_signature_lam2():
    """Finite-time M2 blowup: the 1000-fold time converges in j_max, and
    mass starts draining into the leak account once the front exits."""
    t40 = ag.time_to_m2_ratio(2.0, 40, 1e3, tol=1e-10, t_end=100.0)
    t60 = ag.time_to_m2_ratio(2.0, 60, 1e3, tol=1e-10, t_end=100.0)
    assert abs(t40 - t60) / t60 <= 0.05

    states = ag.simulate(2.0, 60, 5.0, tol=1e-10)
    assert max(s.M2 for s in states) >= 1e3
    assert states[-1].leaked_mass > 0.01
    assert states[-1].M1 < 0.99
    assert max(abs(s.M1 + s.leaked_mass - 1.0) for s in states) <= 1e-6


def test_blowup_time_contrast_nongelling():
    """For lambda=2 the R-fold M2 time saturates at the gel time as R
    grows; for lambda=0.5 it keeps climbing (power-law growth, no
    singularity)."""
    tg3 = ag.time_to_m2_ratio(2.0, 40, 1e3, t_end=100.0)
    tg6 = ag.time_to_m2_ratio(2.0, 40, 1e6, t_end=100.0)
    assert tg6 / tg3 <= 1.05

    tn3 = ag.time_to_m2_ratio(0.5, 40, 1e3, t_end=1e6)
    tn6 = ag.time_to_m2_ratio(0.5, 40, 1e6, t_end=1e6)
    assert tn6 / tn3 >= 5.0


def test_simulate_validation():
    with pytest.raises(ag.ValidationError):
        ag.simulate(0.0, 30, 10.0)  # j_max too small
    with pytest.raises(ag.ValidationError):
        ag.simulate(0.0, 60, 10.0, init=0.0)
    with pytest.raises(ag.ValidationError):
        ag.simulate(0.0, 60, 1e-4)


def test_moment_definitions(kinetics_lam0):
    st = kinetics_lam0[3]
    m = 2.0 ** np.arange(len(st.c))
    assert st.M0 == pytest.approx(float(np.sum(st.c)), rel=1e-14)
    assert st.M1 == pytest.approx(float(np.sum(m * st.c)), rel=1e-14)
    assert st.M2 == pytest.approx(float(np.sum(m * m * st.c)), rel=1e-14)


# ---------------------------------------------------------------------------
# collapse


def test_collapse_identity_snapshot(collapse_chain):
    """A snapshot compared against itself has zero self-collapse distance."""
    states, sol, _ = collapse_chain
    twice = [states[1], states[-1], states[-1]]
    rep = ag.collapse(twice, sol, (0.0, math.inf))
    assert rep.self_distances[-1] == 0.0


def test_collapse_self_distances_decrease(collapse_chain):
    _, _, rep = collapse_chain
    sd = rep.self_distances
    assert len(sd) >= 4
    assert sd[-1] < sd[0]
    assert all(b <= a * 1.05 for a, b in zip(sd, sd[1:]))  # shrinking trend


def test_collapse_scaling_distance_trend(collapse_chain):
    _, _, rep = collapse_chain
    ds = rep.scaling_distances
    assert all(ds[i] > ds[i + 1] for i in range(len(ds) - 4, len(ds) - 1))


def test_collapse_window_too_early(collapse_chain):
    states, sol, _ = collapse_chain
    with pytest.raises(ag.WindowTooEarly):
        ag.collapse(states, sol, (0.5, 2.0))


def test_collapse_needs_nongel_scaling(collapse_chain):
    states, _, _ = collapse_chain
    prob = ag.make_problem(2.0, 2.6)
    seed = ag.gel_series(2.0, 2.6, 20)
    gel_sol = ag.march(prob, seed, 100.0, tol=1e-10)
    with pytest.raises(ag.RegimeViolation):
        ag.collapse(states, gel_sol, (0.3, 1e3))


def test_rescaled_is_time_invariant_under_exact_scaling(collapse_chain):
    """Feeding states built from the scaling form itself collapses all
    snapshots onto one curve (sanity of the rescaling convention)."""
    states, sol, _ = collapse_chain
    m = 2.0 ** np.arange(61)
    late = states[-1]
    xs, ys = _rescaled(late, m)
    assert np.all(ys >= 0.0)
    # mass log-density sums to ~M1/ln2 normalization: sum(y * ln2) == 1
    assert float(np.sum(ys)) * LN2 == pytest.approx(1.0, rel=1e-10)


def test_csv_exports(tmp_path, kinetics_lam0):
    snap = tmp_path / "snap.csv"
    mom = tmp_path / "mom.csv"
    ag.kinetics.write_snapshots_csv(str(snap), kinetics_lam0[:3], ["hdr"])
    ag.kinetics.write_moments_csv(str(mom), kinetics_lam0[:3], ["hdr"])
    s_lines = snap.read_text().splitlines()
    assert s_lines[0] == "# hdr"
    assert s_lines[1] == "t,j,m,c"
    assert len(s_lines) == 2 + 3 * 61
    m_lines = mom.read_text().splitlines()
    assert m_lines[1] == "t,M0,M1,M2,leaked"
    assert len(m_lines) == 2 + 3
