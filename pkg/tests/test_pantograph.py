"""Global marching, residual verification, decay bounds, tail fits."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

import aggscale as ag
from aggscale.pantograph import loglinear_decay_fit

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# marching basics


def test_degenerate_probe_closed_form():
    """At the window's upper endpoint the equation is psi' = -psi^2 for
    lambda=2, solved by 1/(1+zeta)."""
    prob, seed = ag.degenerate_probe(2.0)
    sol = ag.march(prob, seed, 200.0, tol=1e-10)
    for z in (1.0, 10.0, 100.0):
        assert sol.eval(z) == pytest.approx(1.0 / (1.0 + z), rel=1e-10)


def test_marginal_constant_solution():
    prob = ag.make_problem(1.0, 0.0)
    seed = ag.marginal_series(0.0, 20)
    sol = ag.march(prob, seed, 100.0, tol=1e-10, handoff=1.0)
    us = np.geomspace(1.5, 99.0, 64)
    assert np.all(sol.eval(us) == 1.0)


def test_nongel_march_to_x50(nongel_shallow):
    """lambda=0.5, c=1, end mapped from x=50 (the decay floor stops the
    march first): positive, decreasing, residual within tolerance."""
    prob, _ = nongel_shallow[0.5]
    delta = ag.solve_delta_nongel(0.5).value
    seed = ag.nongel_series(0.5, delta, -1.0, 20)
    end = prob.varmap.to_transformed(50.0)
    sol = ag.march(prob, seed, end, tol=1e-8,
                   floor=prob.constants.psi0 * 1e-6, handoff=seed.radius_est / 8.0)
    assert sol.decayed
    us = np.geomspace(sol.handoff * 1.01, sol.front * 0.999, 512)
    ps = sol.eval(us)
    assert np.all(ps > 0.0)
    assert np.all(np.diff(ps) < 0.0)
    assert sol.residual_max <= 1e-8


def test_march_tol_window():
    prob, seed = ag.degenerate_probe(2.0)
    with pytest.raises(ag.ValidationError):
        ag.march(prob, seed, 10.0, tol=1e-13)
    with pytest.raises(ag.ValidationError):
        ag.march(prob, seed, 10.0, tol=1e-3)


def test_march_seed_regime_mismatch():
    prob = ag.make_problem(1.0, -1.0)
    seed = ag.gel_series(2.0, 2.6, 10)
    with pytest.raises(ag.ValidationError):
        ag.march(prob, seed, 10.0)


def test_march_end_before_handoff():
    prob = ag.make_problem(1.0, -1.0)
    seed = ag.marginal_series(-1.0, 20)
    with pytest.raises(ag.ValidationError):
        ag.march(prob, seed, seed.handoff / 2.0)


def test_negative_crossing_carries_location_and_solution():
    prob = ag.make_problem(2.0, 2.52)
    seed = ag.gel_series(2.0, 2.52, 20)
    with pytest.raises(ag.NegativeCrossing) as exc:
        ag.march(prob, seed, 1e4, tol=1e-10)
    assert 1.0 < exc.value.location < 1e3
    assert exc.value.solution is not None
    assert exc.value.solution.covers(exc.value.location * 0.99)


def test_residual_blowup_on_bad_seed():
    """A one-term marginal seed handed off far beyond its accuracy renders
    the stored interpolant inconsistent with the integral form."""
    prob = ag.make_problem(1.0, -1.0)
    seed = ag.marginal_series(-1.0, 1)
    with pytest.raises(ag.ResidualBlowup):
        ag.march(prob, seed, 20.0, tol=1e-10, handoff=0.5)


# ---------------------------------------------------------------------------
# integral-form residuals, cross-checked by adaptive quadrature


def test_nongel_integral_form_quad_oracle(nongel_shallow):
    prob, sol = nongel_shallow[0.0]
    rho = prob.coeffs.ratio
    worst = 0.0
    for y in np.geomspace(sol.handoff * 1.3, sol.front * 0.98, 24):
        val, _ = quad(lambda w: sol.eval(w) ** 2, rho * y, y, limit=200)
        lhs = (1.0 - prob.lam) * y * sol.eval(y)
        worst = max(worst, abs(lhs - val) / abs(lhs))
    assert worst <= 1e-8


def test_marginal_integral_form_quad_oracle(marginal_solution):
    """psi(x) = (psi0 - psi0^2 ln2) + int_{x/2}^x psi^2 dy/y; the additive
    constant is what pins the saturation plateau at 1/ln2 - 1."""
    prob, sol = marginal_solution
    worst = 0.0
    const = 1.0 - LN2
    for x in np.geomspace(sol.handoff * 1.3, sol.front * 0.98, 24):
        val, _ = quad(lambda w: sol.eval(w) ** 2 / w, x / 2.0, x, limit=200)
        worst = max(worst, abs(sol.eval(x) - const - val) / sol.eval(x))
    assert worst <= 1e-8


def test_residual_checkpoints_within_tol(nongel_shallow, marginal_solution):
    for key in (0.0, 0.5):
        _, sol = nongel_shallow[key]
        assert sol.residual_max <= sol.tol
    _, solm = marginal_solution
    assert solm.residual_max <= solm.tol


# ---------------------------------------------------------------------------
# marginal saturation (the correct global behaviour of the a1 < 0 family)


def test_marginal_saturates_at_the_identity_level(marginal_solution):
    """Monotone positive solutions with psi(0)=1 approach 1/ln2 - 1; they
    cannot decay to zero (the integral identity forbids it)."""
    _, sol = marginal_solution
    level = 1.0 / LN2 - 1.0
    tail = sol.eval(sol.front * 0.999)
    assert tail == pytest.approx(level, rel=5e-5)
    assert tail > level  # approach from above
    us = np.geomspace(sol.handoff * 1.01, sol.front * 0.999, 1024)
    ps = sol.eval(us)
    assert np.all(ps > 0.0)
    assert np.all(np.diff(ps) < 0.0)


def test_marginal_tail_fit_insufficient_decay(marginal_solution):
    _, sol = marginal_solution
    with pytest.raises(ag.InsufficientDecay):
        ag.fit_exponential_tail(sol)


# ---------------------------------------------------------------------------
# decay bounds


def test_nongel_decay_bound_holds(nongel_deep):
    for lam in (0.0, 0.5):
        _, sol = nongel_deep[lam]
        rep = ag.check_decay_bound(sol)
        assert rep.max_violation <= 1e-10
        assert rep.holds


def test_marginal_constant_violates_bound():
    """psi == 1 gives 1 <= ln2, false: the bound certifies decay only for
    strictly decreasing solutions."""
    prob = ag.make_problem(1.0, 0.0)
    seed = ag.marginal_series(0.0, 20)
    sol = ag.march(prob, seed, 100.0, tol=1e-10, handoff=1.0)
    rep = ag.check_decay_bound(sol)
    assert rep.max_violation == pytest.approx(1.0 - LN2, rel=1e-12)


def test_marginal_decreasing_family_violates_bound(marginal_solution):
    """The a1=-1 member saturates, so the squared-history bound fails by
    psi0 - psi0^2 ln2 = 1 - ln2 at the plateau."""
    _, sol = marginal_solution
    rep = ag.check_decay_bound(sol)
    assert rep.max_violation == pytest.approx(1.0 - LN2, abs=1e-3)


def test_decay_bound_needs_coverage():
    prob = ag.make_problem(1.0, -1.0)
    seed = ag.marginal_series(-1.0, 20)
    sol = ag.march(prob, seed, seed.handoff * 8.0, tol=1e-10)  # 3 intervals
    with pytest.raises(ag.ValidationError):
        ag.check_decay_bound(sol)


def test_decay_bound_gelling_unsupported(nongel_deep):
    prob = ag.make_problem(2.0, 2.6)
    seed = ag.gel_series(2.0, 2.6, 20)
    sol = ag.march(prob, seed, 100.0, tol=1e-10)
    with pytest.raises(ag.RegimeViolation):
        ag.check_decay_bound(sol)


# ---------------------------------------------------------------------------
# exponential tail fits


def test_loglinear_fit_synthetic():
    x = np.linspace(0.5, 8.0, 200)
    rate, r2 = loglinear_decay_fit(x, np.exp(-3.0 * x))
    assert rate == pytest.approx(3.0, rel=0.01)
    assert r2 > 0.999999


def test_nongel_tail_fits(nongel_deep):
    for lam in (0.0, 0.5):
        _, sol = nongel_deep[lam]
        rate, r2 = ag.fit_exponential_tail(sol)
        assert rate > 0.0 and math.isfinite(rate)
        assert r2 >= 0.999


# ---------------------------------------------------------------------------
# consistency properties


def test_series_march_overlap():
    """Marching from handoff/2 reproduces the pure-series values on
    [handoff/2, handoff] within 10x the tolerance."""
    tol = 1e-10
    prob = ag.make_problem(2.0, 2.6)
    seed = ag.gel_series(2.0, 2.6, 20)
    h0 = seed.handoff
    sol_half = ag.march(prob, seed, 10.0, tol=tol, handoff=h0 / 2.0)
    us = np.geomspace(h0 / 2.0 * 1.01, h0 * 0.99, 64)
    marched = sol_half.eval(us)
    from_series = seed.eval(us)
    assert np.max(np.abs(marched - from_series) / np.abs(from_series)) <= 10.0 * tol


def test_nongel_march_rk4_crosscheck():
    """The adaptive march agrees with the independent fixed-step log-grid
    RK4 integrator through four orders of decay."""
    from oracles import rk4_nongel

    lam = 0.5
    prob = ag.make_problem(lam, 1.0)
    delta = ag.solve_delta_nongel(lam).value
    seed = ag.nongel_series(lam, delta, -1.0, 20)
    h0 = seed.radius_est / 8.0
    sol = ag.march(prob, seed, 1e3, tol=1e-8,
                   floor=prob.constants.psi0 * 1e-6, handoff=h0)
    rk = rk4_nongel(lam, seed.eval, h0, steps_per_interval=2048)
    rk.run(sol.front * 0.99)
    for y, rel in ((0.5, 1e-8), (1.0, 1e-6), (2.0, 1e-4)):
        assert sol.eval(y) == pytest.approx(rk.eval(y), rel=rel)


def test_flat_seed_guard():
    """Near lambda=1 the correction exponent is huge and the seed is
    numerically flat at the default handoff; the march must push the
    handoff out rather than start on the unstable constant solution, and
    must refuse an explicitly flat handoff."""
    lam = 0.9
    prob = ag.make_problem(lam, 1.0)
    delta = ag.solve_delta_nongel(lam).value
    seed = ag.nongel_series(lam, delta, -1.0, 20)
    sol = ag.march(prob, seed, 1e4, tol=1e-8, floor=prob.constants.psi0 * 1e-6)
    assert sol.handoff > seed.handoff  # auto-adjusted outward
    us = np.geomspace(sol.handoff * 1.01, sol.front * 0.999, 256)
    ps = sol.eval(us)
    assert np.all(np.diff(ps) < 0.0)
    assert sol.decayed
    with pytest.raises(ag.ValidationError):
        ag.march(prob, seed, 1e4, tol=1e-8, handoff=seed.radius_est / 8.0)


def test_step_halving_improves_probe():
    prob, seed = ag.degenerate_probe(2.0)

    def err(tol):
        sol = ag.march(prob, seed, 200.0, tol=tol)
        return max(abs(sol.eval(z) - 1.0 / (1.0 + z)) * (1.0 + z)
                   for z in (1.0, 10.0, 100.0))

    e1, e2 = err(4e-5), err(2e-5)
    assert e2 <= e1 / 2.0


def test_breakpoints_geometric(nongel_deep):
    _, sol = nongel_deep[0.5]
    bp = sol.breakpoints
    ratio = sol.problem.coeffs.ratio
    assert bp[0] == pytest.approx(sol.handoff)
    assert np.allclose(bp[1:] * ratio, bp[:-1], rtol=1e-12)
    assert sol.delay_intervals_covered >= 5.0


def test_solution_export_round_trip(tmp_path, nongel_shallow):
    _, sol = nongel_shallow[0.0]
    path = tmp_path / "sol.csv"
    ag.write_solution_csv(str(path), sol, n=32, header_lines=["probe run"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# probe run"
    assert lines[1] == "var,psi,x,phi"
    row = lines[2].split(",")
    assert len(row) == 4
    u, psi, x, phi = map(float, row)
    # 17 significant digits round-trip exactly in binary
    assert psi == sol.eval(u)
    assert phi == pytest.approx(x ** (-1.0) * psi, rel=1e-15)  # q = 1+lam = 1
